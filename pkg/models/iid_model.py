from core.rng import RngStream
from core.spectral import RVLaw
from errors import InvalidParameterError
from models.path import PathMatrix


def describe_law(law: RVLaw) -> str:
    return f"alpha={law.alpha:g},spectral={law.spectral.name},d={law.dim}"


def simulate_iid(law: RVLaw, n: int, rng: RngStream) -> PathMatrix:
    """
    iid の正則変動ベクトル列。裾過程は Y_t = 0 (t != 0) の自明なベースライン。

    Args:
        law (RVLaw): 周辺分布
        n (int): パス長
        rng (RngStream): 乱数ストリーム

    Returns:
        PathMatrix: n×d のパス
    """
    if n < 1:
        raise InvalidParameterError(f"path length must be positive, got n={n}")
    data = law.sample(rng, n)
    return PathMatrix(data, model_id=f"iid({describe_law(law)})", seed=rng,
                      metadata={"alpha": f"{law.alpha:g}", "family": "iid"})

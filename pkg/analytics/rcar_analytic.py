from typing import Optional
import numpy as np

from errors import InvalidParameterError
from core.norms import norm, operator_norm
from core.radial import RadialLaw, sample_pareto
from core.rng import RngStream
from models.rcar_model import RCARSpec
from analytics.samplers import DEFAULT_EPS
from analytics.windows import SpectralWindow, TailWindow, ThetaEstimate, ThetaMethod


def rcar_forward_tail(spec: RCARSpec, horizon: int, rng: RngStream, eps: float = DEFAULT_EPS,
                      radius: Optional[float] = None, theta0: Optional[np.ndarray] = None) -> TailWindow:
    """
    前向き裾過程 Y_j = A_j ··· A_1 Y_0 (Y_0 = Y·Θ_0) を 1 本生成する。

    j = horizon に達するか ||A_j ··· A_1||·Y < eps になった時点で止め、理由を truncation に記録する。

    Args:
        spec (RCARSpec): 自己回帰の仕様 (alpha と定常分布の spectral measure が必要)
        horizon (int): 最大時点 T
        rng (RngStream): 乱数ストリーム (child(0): Y, child(1): Θ_0, child(2): A)
        eps (float): 打ち切り閾値
        radius (Optional[float]): テスト用に Y を固定する
        theta0 (Optional[np.ndarray]): テスト用に Θ_0 を固定する

    Returns:
        TailWindow: 時点 0..T' の窓
    """
    if horizon < 0:
        raise InvalidParameterError(f"horizon must be nonnegative, got {horizon}")
    if not eps > 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    if spec.alpha is None and radius is None:
        raise InvalidParameterError(f"{spec.name} needs an attested tail index alpha")

    if radius is None:
        assert spec.alpha is not None
        radius = float(sample_pareto(RadialLaw(spec.alpha), rng.child(0)))
    norm_spec = spec.norm_spec
    # 打ち切りと Θ_0 の正規化は同じノルム (RCARSpec が一致を保証する)
    assert spec.stationary_spectral is None or spec.stationary_spectral.norm_tag == norm_spec
    if theta0 is None:
        if spec.stationary_spectral is None:
            raise InvalidParameterError(f"{spec.name} needs the spectral measure of its stationary law")
        start = spec.stationary_spectral.sample(rng.child(1), 1)[0]
    else:
        start = np.asarray(theta0, dtype=float).reshape(spec.d)
        start = start / float(norm(start, norm_spec))

    gen = rng.child(2).generator()
    values = [start]
    product = np.eye(spec.d)
    reason = "horizon"
    for j in range(1, horizon + 1):
        A = spec.draw_a(gen, 1)[0]
        product = A @ product
        values.append(product @ start)
        if operator_norm(product, norm_spec, norm_spec) * radius < eps:
            reason = "eps"
            break

    window = SpectralWindow(0, len(values) - 1, np.array(values))
    return TailWindow(window, radius, truncation=reason)


def rcar_theta_closed_form(spec: RCARSpec) -> ThetaEstimate:
    """
    決定的なスカラー係数 a (|a| < 1) の場合の θ = 1 - |a|^alpha。

    前向き裾過程は |Y_j| = |a|^j Y なので sup_{i>=1} |Θ_i|^alpha = |a|^alpha になる。
    """
    if spec.d != 1 or spec.a_deterministic is None:
        raise InvalidParameterError(f"closed-form theta needs a deterministic scalar coefficient ({spec.name})")
    if spec.alpha is None:
        raise InvalidParameterError(f"{spec.name} needs an attested tail index alpha")
    a = abs(float(spec.a_deterministic[0, 0]))
    if not a < 1:
        raise InvalidParameterError(f"closed-form theta needs |a| < 1, got |a|={a:g}")
    return ThetaEstimate(value=1.0 - a ** spec.alpha, std_error=0.0, method=ThetaMethod.CLOSED_FORM,
                         n_samples=0, details={"truncation": "none", "coefficient": a})

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple
import numpy as np
from scipy import signal

from errors import DivergenceError, InvalidParameterError
from core.norms import NormSpec, norm, operator_norm
from core.rng import RngStream
from core.spectral import RVLaw, SpectralMeasure, positive_unit
from models.path import PathMatrix
from models.scale_law import ScaleLaw

# (Generator, n) -> (A: (n, d, d), B: (n, d))
ABSampler = Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]]

DEFAULT_BURN_IN = 1000
STATIONARY_TOLERANCE = 1e-6
MAX_STATIONARY_LAG = 2000
# operator_norm の探索誤差を覆う余裕
BOUND_MARGIN = 1.05
AB_CHUNK = 65536


@dataclass(frozen=True, eq=False)
class RCARSpec:
    """
    ランダム係数自己回帰 X_t = A_t X_{t-1} + B_t。(A_t, B_t) は iid。

    定常性 (Kesten の条件) と定常分布の裾指数 alpha・spectral measure は
    ユーザーが保証するものとして attestations に記録する。
    """
    d: int
    ab_sampler: ABSampler
    burn_in: int = DEFAULT_BURN_IN
    alpha: Optional[float] = None
    stationary_spectral: Optional[SpectralMeasure] = None
    a_deterministic: Optional[np.ndarray] = None
    norm_spec: NormSpec = field(default_factory=NormSpec.euclidean)
    attestations: Dict[str, str] = field(default_factory=dict)
    name: str = "rcar"

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameterError(f"dimension must be positive, got d={self.d}")
        if self.burn_in < 1:
            raise InvalidParameterError(f"burn_in must be positive, got {self.burn_in}")
        if self.stationary_spectral is not None and self.stationary_spectral.norm_tag != self.norm_spec:
            raise InvalidParameterError(f"stationary spectral measure is normalized in "
                                        f"{self.stationary_spectral.norm_tag}, but the model norm is {self.norm_spec}")

    @staticmethod
    def scalar(a: float, innovation: RVLaw, burn_in: int = DEFAULT_BURN_IN) -> "RCARSpec":
        """
        決定的な係数 a (|a| < 1) と iid イノベーション B_t の 1 変量 AR(1)。
        定常分布の裾指数はイノベーションと同じ alpha になる。
        """
        if innovation.dim != 1:
            raise InvalidParameterError("scalar RCAR needs a one-dimensional innovation law")
        if not abs(a) < 1:
            raise InvalidParameterError(f"scalar RCAR needs |a| < 1 for stationarity, got a={a}")

        def _sampler(gen: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
            return np.full((n, 1, 1), float(a)), innovation.sample(gen, n)

        # a >= 0 かつ正のイノベーションなら定常分布も正
        spectral = positive_unit() if (a >= 0 and innovation.spectral.name == "positive") else None
        return RCARSpec(d=1, ab_sampler=_sampler, burn_in=burn_in, alpha=innovation.alpha,
                        stationary_spectral=spectral, a_deterministic=np.array([[float(a)]]),
                        attestations={"kesten": f"deterministic |a|={abs(a):g} < 1"},
                        name=f"rcar(a={a:g},alpha={innovation.alpha:g})")

    @staticmethod
    def matrix(a: np.ndarray, innovation: RVLaw, scale: Optional[ScaleLaw] = None,
               burn_in: int = DEFAULT_BURN_IN, norm_spec: Optional[NormSpec] = None) -> "RCARSpec":
        """
        A_t = U_t A (U_t ~ scale、省略時は U ≡ 1) と iid イノベーション B_t の d 変量 RCAR。

        E|U|^alpha rho(A)^alpha < 1 を要求する。このとき定常分布の裾はイノベーションから来て
        裾指数は alpha のまま、spectral measure は sum_j E||U_1···U_j A^j Θ_B||^alpha で重み付けた
        方向の法則になる (stationary_spectral_measure で棄却法により引く)。

        Raises:
            InvalidParameterError: 形が合わない、または上の縮小条件を満たさない
        """
        a = np.atleast_2d(np.asarray(a, dtype=float))
        d = innovation.dim
        if a.shape != (d, d):
            raise InvalidParameterError(f"coefficient matrix must be {d}×{d} to match the innovations, got {a.shape}")
        tag = norm_spec or NormSpec.euclidean()
        alpha = innovation.alpha
        rho = float(np.max(np.abs(np.linalg.eigvals(a))))
        moment = scale.moment(alpha) if scale is not None else 1.0
        contraction = moment * rho ** alpha
        if not contraction < 1.0:
            raise InvalidParameterError(f"RCAR needs E|U|^alpha rho(A)^alpha < 1, got {contraction:.4g} "
                                        f"(rho(A)={rho:.4g})")

        def _sampler(gen: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
            u = scale.sample(gen, n) if scale is not None else np.ones(n)
            return u[:, None, None] * a[None], innovation.sample(gen, n)

        label = "deterministic" if scale is None else scale.name
        return RCARSpec(d=d, ab_sampler=_sampler, burn_in=burn_in, alpha=alpha,
                        stationary_spectral=stationary_spectral_measure(a, innovation, scale, tag),
                        a_deterministic=a if scale is None else None, norm_spec=tag,
                        attestations={"kesten": f"E|U|^alpha rho(A)^alpha = {contraction:.4g} < 1",
                                      "coefficients": label},
                        name=f"rcar(d={d},{label},alpha={alpha:g})")

    def draw(self, gen: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        A, B = self.ab_sampler(gen, n)
        A = np.asarray(A, dtype=float).reshape(n, self.d, self.d)
        B = np.asarray(B, dtype=float).reshape(n, self.d)
        return A, B

    def draw_a(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self.draw(gen, n)[0]

    def metadata(self) -> Dict[str, str]:
        meta = {
            "alpha": f"{self.alpha:g}" if self.alpha is not None else "unknown",
            "family": "rcar",
            "burn_in": str(self.burn_in),
        }
        meta.update(self.attestations)
        return meta


def stationary_spectral_measure(a: np.ndarray, innovation: RVLaw, scale: Optional[ScaleLaw],
                                norm_spec: NormSpec) -> SpectralMeasure:
    """
    X = sum_j U_1···U_j A^j B_{-j} の定常分布の spectral measure。

    j 番目の項は重み (E|U|^alpha)^j E||A^j Θ_B||^alpha を持ち、方向は sign(U_1···U_j) A^j Θ_B を
    正規化したもの。符号は |U|^alpha で重みを付けた法則の下で引く。j は重みが先頭の
    STATIONARY_TOLERANCE 倍を下回るところで打ち切り、||A^j Θ_B||^alpha は作用素ノルムを
    上限とする棄却法で重み付けする。

    Raises:
        InvalidParameterError: MAX_STATIONARY_LAG までに重みが減衰しない
    """
    alpha = innovation.alpha
    d = a.shape[0]
    moment = scale.moment(alpha) if scale is not None else 1.0
    tilt = scale.signed_moment(alpha) / moment if scale is not None else 1.0

    powers, caps = [], []
    power = np.eye(d)
    for j in range(MAX_STATIONARY_LAG + 1):
        powers.append(power)
        caps.append(moment ** j * (BOUND_MARGIN * operator_norm(power, innovation.spectral.norm_tag, norm_spec))
                    ** alpha)
        if caps[-1] < STATIONARY_TOLERANCE * caps[0]:
            break
        power = a @ power
    else:
        raise InvalidParameterError(f"stationary spectral weights do not decay within {MAX_STATIONARY_LAG} lags")
    stacked = np.stack(powers)
    cap = np.asarray(caps)
    lag_p = cap / cap.sum()
    lags = np.arange(len(cap))
    positive = (1.0 + tilt ** lags) / 2.0
    discount = moment ** lags

    def _sample(gen: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, d))
        filled = 0
        while filled < size:
            batch = max(size - filled, 256)
            j = gen.choice(len(cap), size=batch, p=lag_p)
            image = np.einsum("nde,ne->nd", stacked[j], innovation.spectral.sample(gen, batch))
            r = np.asarray(norm(image, norm_spec)).reshape(batch)
            keep = (r > 0) & (gen.random(batch) * cap[j] < np.power(r, alpha) * discount[j])
            sign = np.where(gen.random(batch) < positive[j], 1.0, -1.0)
            accepted = sign[keep, None] * image[keep] / r[keep, None]
            take = min(len(accepted), size - filled)
            out[filled:filled + take] = accepted[:take]
            filled += take
        return out

    return SpectralMeasure(dim=d, sampler=_sample, norm_tag=norm_spec, name=f"rcar-stationary(lags={len(cap)})")


def simulate_rcar(spec: RCARSpec, n: int, rng: RngStream,
                  initial_state: Optional[np.ndarray] = None) -> PathMatrix:
    """
    X_t = A_t X_{t-1} + B_t を 0 ベクトルから開始し、burn_in ステップを捨てて長さ n を返す。

    Args:
        spec (RCARSpec): モデル仕様
        n (int): 出力するパス長
        rng (RngStream): 乱数ストリーム
        initial_state (Optional[np.ndarray]): テスト用。与えた場合は X_0 とみなし burn-in を省く

    Returns:
        PathMatrix: n×d のパス

    Raises:
        DivergenceError: 値が有限でなくなった場合 (定常性の条件違反)
    """
    if n < 1:
        raise InvalidParameterError(f"path length must be positive, got n={n}")
    d = spec.d
    if initial_state is None:
        state = np.zeros(d)
        skip = spec.burn_in
    else:
        state = np.asarray(initial_state, dtype=float).reshape(d)
        skip = 0

    gen = rng.child(0).generator()
    total = skip + n
    out = np.empty((n, d))
    step = 0
    while step < total:
        size = min(AB_CHUNK, total - step)
        A, B = spec.draw(gen, size)
        with np.errstate(over="ignore", invalid="ignore"):
            chunk = _recurse(spec, A, B, state)
        finite = np.all(np.isfinite(chunk), axis=1)
        if not np.all(finite):
            raise DivergenceError(step + int(np.argmin(finite)) + 1)
        state = chunk[-1]
        # burn-in 区間は捨てる
        lo = max(step, skip)
        hi = step + size
        if hi > lo:
            out[lo - skip:hi - skip] = chunk[lo - step:]
        step += size

    return PathMatrix(out, model_id=spec.name, seed=rng, metadata=spec.metadata())


def _recurse(spec: RCARSpec, A: np.ndarray, B: np.ndarray, state: np.ndarray) -> np.ndarray:
    if spec.a_deterministic is not None and spec.d == 1:
        # 係数が定数なら線形フィルタで一括計算できる
        a = float(spec.a_deterministic[0, 0])
        y, _ = signal.lfilter([1.0], [1.0, -a], B[:, 0], zi=[a * float(state[0])])
        return y[:, None]

    out = np.empty_like(B)
    x = state
    for t in range(len(B)):
        x = A[t] @ x + B[t]
        out[t] = x
    return out

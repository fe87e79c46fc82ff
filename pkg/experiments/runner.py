import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from errors import ConfigError, InvalidParameterError
from core.hill import hill_estimator
from core.rng import RngStream
from models import MMASpec, PathMatrix
from analytics import (
    TIME_CHANGE_BATTERY,
    ClusterSizeLaw,
    IdentityCheck,
    LaplaceResult,
    MCValue,
    Sided,
    ThetaEstimate,
    cluster_size_law,
    indicator,
    lag_reversal_check,
    laplace_functional,
    linear_projection_theta,
    load_functional_manifest,
    mma_theta_branch_form,
    theta_forward,
    time_change_check,
)
from estimators import (
    ClusterPartition,
    EmpiricalTailProcess,
    ThresholdSpec,
    anticluster_diagnostic,
    block_bootstrap_se,
    blocks_estimator,
    cluster_size_distribution,
    empirical_tail_process,
    extract_clusters,
    maximum_law_check,
    point_process_summary,
    runs_estimator,
    select_threshold,
    tail_equivalence_ratio,
)
from filters.stream_independence_filter import Splitter
from filters import (
    CheckResult,
    cluster_law_coherence_filter,
    cluster_size_tv_filter,
    identity_filter,
    laplace_coherence_filter,
    pareto_anchor_filter,
    runs_blocks_agreement_filter,
    spectral_anchor_filter,
    stream_independence_filter,
    tail_equivalence_filter,
    theta_coherence_filter,
)
from experiments.builders import ModelHandle, build_model, default_threshold_k
from experiments.config import ExperimentConfig, Operation
from experiments.report import RunReport, write_report
from utils import ensure_dir, parallel_map, print_status

# ルートストリームの子の割り当て
PATH_STREAMS = 0
ANALYTIC_STREAMS = 1
BOOTSTRAP_STREAMS = 2
INDEPENDENCE_STREAMS = 3


class ReplicateResult:
    """1 本のパスに対する推定結果 (verify で使う)"""

    def __init__(self, replicate: int, threshold: ThresholdSpec, r: int):
        self.replicate = replicate
        self.threshold = threshold
        self.r = r
        self.tail_process: Optional[EmpiricalTailProcess] = None
        self.runs: Optional[ThetaEstimate] = None
        self.blocks: Optional[ThetaEstimate] = None
        self.partition: Optional[ClusterPartition] = None
        self.tail_ratio: Optional[MCValue] = None
        self.maximum_law: Optional[IdentityCheck] = None


class ExperimentRunner:
    """
    設定にしたがってシミュレーション、解析計算、推定、検証を実行するクラス
    """
    def __init__(self, config: ExperimentConfig, resume: bool = False, splitter: Optional[Splitter] = None):
        """
        ExperimentRunner を初期化する

        Args:
            config (ExperimentConfig): 検証済みの設定
            resume (bool): 保存済みのパスがあれば再利用するか
            splitter (Optional[Splitter]): ストリーム独立性チェックに使う分割器 (テスト用)
        """
        self.config = config
        self.resume = resume
        self.model: ModelHandle = build_model(config)
        self.root = RngStream(config.run.master_seed)
        self.splitter: Splitter = splitter or self.root.child(INDEPENDENCE_STREAMS).child
        self.out_dir = Path(config.output.directory)
        self.operations = set(config.analysis.operations)

        self.paths: List[PathMatrix] = []
        self.theta: Optional[ThetaEstimate] = None
        self.theta_mc: Optional[ThetaEstimate] = None
        self.theta_branch: Optional[ThetaEstimate] = None
        self.tail_constant: Optional[MCValue] = None
        self.cluster_law: Optional[ClusterSizeLaw] = None
        self.laplace: List[LaplaceResult] = []
        self.identities: List[IdentityCheck] = []
        self.replicates: List[ReplicateResult] = []

        attestations = self.model.spec.metadata() if hasattr(self.model.spec, "metadata") else {}
        self.report = RunReport(config_hash=config.config_hash, model_id=self.model.model_id,
                                master_seed=config.run.master_seed, overrides=dict(config.overrides),
                                attestations=attestations)

    def path_stream(self, replicate: int) -> RngStream:
        return self.root.child(PATH_STREAMS).child(replicate)

    def analytic_stream(self, operation: Operation) -> RngStream:
        return self.root.child(ANALYTIC_STREAMS).child(list(Operation).index(operation))

    def _timed(self, stage: str, fn: Callable[[], Any]) -> Any:
        start = time.perf_counter()
        try:
            return fn()
        finally:
            self.report.timings[stage] = self.report.timings.get(stage, 0.0) + time.perf_counter() - start

    # ------------------------------------------------------------------
    # simulate

    def simulate(self) -> List[PathMatrix]:
        """
        replicates 本のパスを生成する。resume のときは config hash が一致する保存済みパスを使う。
        各 replicate は独立なストリーム path_stream(rep) を使うので、run.workers 本のスレッドに
        分けても結果と順序は変わらない。

        Returns:
            List[PathMatrix]: 生成 (または再利用) したパス
        """
        print_status("=== SIMULATE ===", "header")
        replicates = list(range(self.config.run.replicates))
        self.paths = self._timed("simulate", lambda: parallel_map(
            self._simulate_replicate, replicates, self.config.run.workers))
        for rep, path in zip(replicates, self.paths):
            self.report.add("simulate", {"method": "path", "value": float(np.max(path.norms())),
                                         "detail": f"max_norm;d={path.d}"}, n=path.n, replicate=rep)
        return self.paths

    def _simulate_replicate(self, rep: int) -> PathMatrix:
        n = self.config.run.n
        csv_path = self.out_dir / "paths" / f"rep_{rep:03d}.csv"
        cached = PathMatrix.load(csv_path) if self.resume else None
        if cached is not None and cached.metadata.get("config_hash") == self.config.config_hash \
                and cached.n == n and cached.metadata.get("master_seed") == str(self.config.run.master_seed):
            print_status(f"Resuming with existing path {csv_path}", "success")
            return cached
        if cached is not None:
            print_status(f"Cached path {csv_path} belongs to another config; simulating again", "warning")
        print_status(f"Simulating replicate {rep + 1}/{self.config.run.replicates} "
                     f"({self.model.model_id}, n={n})...", "info")
        path = self.model.simulate(n, self.path_stream(rep))
        path = replace(path, metadata=dict(path.metadata, config_hash=self.config.config_hash,
                                           master_seed=str(self.config.run.master_seed)))
        if self.config.output.save_paths:
            path.save(csv_path)
        return path

    # ------------------------------------------------------------------
    # analytic

    def analytic(self) -> None:
        """設定された tail-analytic の演算を実行し、結果をレポートに加える"""
        print_status("=== ANALYTIC ===", "header")
        a = self.config.analysis
        sampler = self.model.sampler
        common = {"shards": a.shards, "workers": self.config.run.workers}

        if Operation.THETA in self.operations:
            print_status("Computing the candidate extremal index...", "info")
            self.theta = self._timed("analytic", lambda: self.model.analytic_theta(
                a.n_mc, self.analytic_stream(Operation.THETA), a.shards, self.config.run.workers))
            if self.theta is None:
                print_status(f"No closed-form theta for {self.model.model_id}; use theta-forward", "warning")
            else:
                self.report.add("theta", self.theta.to_record())

        if Operation.THETA_FORWARD in self.operations:
            print_status(f"Computing theta from the forward spectral process (horizon={a.horizon})...", "info")
            self.theta_mc = self._timed("analytic", lambda: theta_forward(
                sampler, a.horizon, a.n_mc, self.analytic_stream(Operation.THETA_FORWARD), strict=False, **common))
            self.report.add("theta-forward", self.theta_mc.to_record())

        if Operation.THETA_BRANCH in self.operations:
            if isinstance(self.model.spec, MMASpec):
                spec = self.model.spec
                self.theta_branch = self._timed("analytic", lambda: mma_theta_branch_form(
                    spec, a.n_mc, self.analytic_stream(Operation.THETA_BRANCH), **common))
                self.report.add("theta-branch", self.theta_branch.to_record())
            else:
                print_status("theta-branch applies to moving averages only; skipped", "warning")

        if Operation.TAIL_CONSTANT in self.operations:
            self.tail_constant = self.model.tail_constant(a.n_mc, self.analytic_stream(Operation.TAIL_CONSTANT),
                                                          a.shards, self.config.run.workers)
            if self.tail_constant is not None:
                self.report.add("tail-constant", dict(self.tail_constant.to_record(), method="tail-constant"))

        if Operation.CLUSTER_LAW in self.operations:
            print_status("Computing the cluster-size law...", "info")
            self.cluster_law = self._timed("analytic", lambda: cluster_size_law(
                sampler, a.horizon, a.n_mc, self.analytic_stream(Operation.CLUSTER_LAW), theta=self.theta_mc,
                **common))
            for record in self.cluster_law.to_records():
                self.report.add("cluster-law", record)
            self.report.add_distribution("kappa-law", [{"k": k, "probability": p}
                                                       for k, p in enumerate(self.cluster_law.kappa, start=1)])

        if Operation.LAPLACE in self.operations:
            functionals = self._functionals()
            for j, f in enumerate(functionals):
                print_status(f"Computing the Laplace functional for '{f.name}'...", "info")
                result = self._timed("analytic", lambda: laplace_functional(
                    f, sampler, a.horizon, a.n_mc, self.analytic_stream(Operation.LAPLACE).child(j), **common))
                self.laplace.append(result)
                for record in result.to_records():
                    self.report.add("laplace", record)

        if Operation.TIME_CHANGE in self.operations:
            if sampler.two_sided:
                s, t = a.window
                for li, lag in enumerate(a.time_change_lags):
                    for fi, f in enumerate(TIME_CHANGE_BATTERY):
                        stream = self.analytic_stream(Operation.TIME_CHANGE).child(li).child(fi)
                        check = self._timed("analytic", lambda: time_change_check(
                            sampler, lag, s, t, f, a.n_mc, stream, **common))
                        self.identities.append(check)
                        self.report.add("time-change", dict(check.to_record(), lag=lag, s=s, t=t, functional=f.name))
            else:
                print_status(f"{sampler.name} only has forward windows; time-change skipped", "warning")

        if Operation.LAG_REVERSAL in self.operations:
            if sampler.two_sided:
                check = self._timed("analytic", lambda: lag_reversal_check(
                    sampler, a.lag, a.n_mc, self.analytic_stream(Operation.LAG_REVERSAL), **common))
                self.identities.append(check)
                self.report.add("lag-reversal", dict(check.to_record(), lag=a.lag))
            else:
                print_status(f"{sampler.name} only has forward windows; lag-reversal skipped", "warning")

        if Operation.PROJECTION in self.operations:
            vector = a.projection or tuple([1.0] * sampler.dim)
            try:
                sided = Sided.from_string(a.sided)
            except InvalidParameterError as e:
                raise ConfigError("analysis.sided", str(e))
            estimate = self._timed("analytic", lambda: linear_projection_theta(
                vector, sampler, a.horizon, a.n_mc, self.analytic_stream(Operation.PROJECTION), sided=sided,
                **common))
            self.report.add("projection", dict(estimate.to_record(), sided=sided.value))
        print_status("Analytic stage finished", "success")

    def _functionals(self):
        path = self.config.analysis.functionals
        if path is None:
            return [indicator(1.0, 1.0)]
        try:
            return load_functional_manifest(path)
        except InvalidParameterError as e:
            raise ConfigError("analysis.functionals", str(e))

    # ------------------------------------------------------------------
    # estimate

    def _threshold(self, path: PathMatrix) -> ThresholdSpec:
        a = self.config.analysis
        norm_spec = self.model.sampler.norm_spec
        try:
            if a.quantile is not None:
                return select_threshold(path, ThresholdSpec.quantile(a.quantile, norm_spec))
            k = a.k if a.k is not None else default_threshold_k(path.n)
            return select_threshold(path, ThresholdSpec.order_statistic(k, norm_spec))
        except InvalidParameterError as e:
            raise ConfigError("analysis.quantile" if a.quantile is not None else "analysis.k", str(e))

    def estimate(self) -> List[ReplicateResult]:
        """各パスに設定された推定量を適用する"""
        print_status("=== ESTIMATE ===", "header")
        if not self.paths:
            self.simulate()
        a = self.config.analysis
        self.replicates = []
        for rep, path in enumerate(self.paths):
            print_status(f"Estimating on replicate {rep + 1}/{len(self.paths)}", "info")
            result = self._timed("estimate", lambda: self._estimate_one(rep, path))
            self.replicates.append(result)
        if a.n_boot == 0 and Operation.BOOTSTRAP in self.operations:
            print_status("analysis.n_boot = 0; bootstrap skipped", "warning")
        print_status("Estimation stage finished", "success")
        return self.replicates

    def _estimate_one(self, rep: int, path: PathMatrix) -> ReplicateResult:
        a = self.config.analysis
        thr = self._threshold(path)
        r = a.r_rule.resolve(path.n)
        ctx = {"n": path.n, "k": thr.k, "r": r, "replicate": rep}
        result = ReplicateResult(rep, thr, r)
        self.report.add("threshold", {"method": thr.mode.value, "value": thr.level,
                                      "exceedances": thr.exceedances}, **ctx)

        if Operation.TAIL_PROCESS in self.operations:
            s, t = a.window
            process = empirical_tail_process(path, thr, s, t)
            result.tail_process = process
            ks = process.pareto_check(self.model.alpha)
            record: Dict[str, Any] = {"method": "anchors", "value": float(process.size), "dropped": process.dropped,
                                      "ks_statistic": ks.statistic, "ks_pvalue": ks.pvalue}
            if t >= 1:
                record["beyond_0.1_at_1"] = process.fraction_beyond(1, 0.1)
                record["ratio_near_1_at_1"] = process.fraction_between(1, 0.9, 1.1)
            self.report.add("tail-process", record, **ctx)
            if thr.k is not None and thr.k < path.n:
                alpha_hat, alpha_se = hill_estimator(path.norms(thr.norm_spec), thr.k)
                self.report.add("hill", {"method": "hill", "value": alpha_hat, "std_error": alpha_se}, **ctx)

        if Operation.RUNS in self.operations:
            result.runs = runs_estimator(path, thr, r, corrected=a.corrected)
            self.report.add("runs", result.runs.to_record(), **ctx)
        if Operation.BLOCKS in self.operations:
            result.blocks = blocks_estimator(path, thr, r, corrected=a.corrected)
            self.report.add("blocks", result.blocks.to_record(), **ctx)

        if Operation.CLUSTERS in self.operations:
            partition = extract_clusters(path, thr, r)
            result.partition = partition
            self.report.add("clusters", {"method": "disjoint-blocks", "value": float(partition.count),
                                         "mean_size": partition.mean_size(), "modal_size": partition.modal_size(),
                                         "blocks": partition.n_blocks}, **ctx)
            dist = cluster_size_distribution(partition, a.max_cluster_size)
            self.report.add_distribution("cluster-size", [{"k": k, "probability": p}
                                                          for k, p in enumerate(dist, start=1)], **ctx)

        if Operation.POINT_PROCESS in self.operations:
            summary = point_process_summary(path, thr, r, a.levels)
            for record in summary.to_records():
                u = record.pop("u")
                record.pop("r", None)
                self.report.add("point-process", dict(record, method="compound-poisson",
                                                      value=float(record["clusters"])), u=u, **ctx)
            for level in summary.levels:
                self.report.add_distribution("marks", [{"mark": m} for m in np.sort(level.marks)], u=level.u, **ctx)

        if Operation.ANTICLUSTER in self.operations:
            m_list = [m for m in a.m_list if m <= r]
            if m_list:
                rows = anticluster_diagnostic(path, thr, m_list, r)
                for row in rows:
                    self.report.add("anticluster", {"method": "anticluster", "value": row.probability,
                                                    "std_error": row.std_error, "n_samples": row.anchors,
                                                    "m": row.m}, **ctx)

        if Operation.TAIL_EQUIVALENCE in self.operations:
            innovations = self.model.innovations(path.n, self.path_stream(rep))
            if innovations is None:
                print_status(f"innovations of {self.model.model_id} are not available; tail-equivalence skipped",
                             "warning")
            else:
                result.tail_ratio = tail_equivalence_ratio(path, innovations, norm_spec=thr.norm_spec)
                self.report.add("tail-equivalence", dict(result.tail_ratio.to_record(), method="ratio"), **ctx)

        if Operation.MAXIMUM_LAW in self.operations:
            theta = self.theta or self.theta_mc or result.blocks
            if theta is None:
                print_status("maximum-law needs theta (theta, theta-forward or blocks); skipped", "warning")
            else:
                check = maximum_law_check(path, thr, r, theta.value, self.model.alpha, theta_se=theta.std_error)
                result.maximum_law = check
                self.report.add("maximum-law", check.to_record(), **ctx)

        if Operation.BOOTSTRAP in self.operations and a.n_boot > 0:
            stream = self.root.child(BOOTSTRAP_STREAMS).child(rep)
            for j, (name, fn) in enumerate((("runs", runs_estimator), ("blocks", blocks_estimator))):
                boot = block_bootstrap_se(path, thr, r, lambda p, t, rr: fn(p, t, rr, corrected=a.corrected),
                                          a.n_boot, stream.child(j))
                self.report.add("bootstrap", {"method": name, "value": boot.mean, "std_error": boot.std_error,
                                              "n_samples": boot.replicates, "failures": boot.failures}, **ctx)
        return result

    # ------------------------------------------------------------------
    # verify

    def verify(self) -> List[CheckResult]:
        """
        不変条件のバッテリーを実行し、1 行 1 条件の表をレポートに加える

        Returns:
            List[CheckResult]: すべてのチェック結果
        """
        if not self.paths and self._needs_paths():
            self.simulate()
        if self.theta is None and self.theta_mc is None and self.cluster_law is None and not self.laplace \
                and not self.identities:
            self.analytic()
        if not self.replicates and self._needs_paths():
            self.estimate()

        print_status("=== VERIFY ===", "header")
        a = self.config.analysis
        checks: List[CheckResult] = [stream_independence_filter(self.splitter)]
        if self.theta is not None and self.theta_mc is not None:
            checks.append(theta_coherence_filter(self.theta_mc, self.theta, name="theta-forward-vs-theta"))
        if self.theta is not None and self.theta_branch is not None:
            checks.append(theta_coherence_filter(self.theta_branch, self.theta, name="theta-branch-vs-theta"))
        if self.cluster_law is not None:
            checks.append(cluster_law_coherence_filter(self.cluster_law))
        for result in self.laplace:
            checks.append(laplace_coherence_filter(result))
        for check in self.identities:
            checks.append(identity_filter(check))

        reference = self.theta or self.theta_mc
        for rep in self.replicates:
            suffix = f"[rep={rep.replicate}]"
            if rep.runs is not None and rep.blocks is not None:
                checks.append(_suffixed(runs_blocks_agreement_filter(rep.runs, rep.blocks, a.agreement_tolerance),
                                        suffix))
            for estimate in (rep.runs, rep.blocks):
                if estimate is not None and reference is not None:
                    checks.append(theta_coherence_filter(estimate, reference, absolute=a.agreement_tolerance,
                                                         name=f"{estimate.method.value}-vs-theta{suffix}"))
            if rep.tail_process is not None:
                checks.append(_suffixed(pareto_anchor_filter(rep.tail_process, self.model.alpha), suffix))
                checks.append(_suffixed(spectral_anchor_filter(rep.tail_process), suffix))
            if rep.partition is not None and self.cluster_law is not None:
                checks.append(_suffixed(cluster_size_tv_filter(rep.partition, self.cluster_law, a.tv_tolerance),
                                        suffix))
            if rep.tail_ratio is not None and self.tail_constant is not None:
                checks.append(_suffixed(tail_equivalence_filter(rep.tail_ratio, self.tail_constant.value), suffix))
            if rep.maximum_law is not None:
                checks.append(_suffixed(identity_filter(rep.maximum_law), suffix))

        self.report.checks = checks
        for check in checks:
            print_status(f"{check.name}: {check.status} (statistic={check.statistic:.6g}, "
                         f"tolerance={check.tolerance:.6g})", "success" if check.passed else "error")
        return checks

    def _needs_paths(self) -> bool:
        return any(not op.analytic for op in self.operations)

    # ------------------------------------------------------------------

    def run(self) -> RunReport:
        """simulate + analytic + estimate"""
        if self._needs_paths():
            self.simulate()
        self.analytic()
        if self._needs_paths():
            self.estimate()
        return self.report

    def write(self, results: bool = True) -> List[Path]:
        ensure_dir(self.out_dir)
        return write_report(self.report, self.out_dir, self.config.output.format.value, results=results)


def _suffixed(check: CheckResult, suffix: str) -> CheckResult:
    return replace(check, name=f"{check.name}{suffix}")

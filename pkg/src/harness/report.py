"""
结果输出

时间序列日志与指标汇总表的CSV输出
"""

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from ..utils.helpers import ensure_directory
from ..utils.logger import get_logger
from .metrics import MetricsReport
from .scenario import ScenarioConfig


logger = get_logger(__name__)

SUMMARY_INDEX = ["item", "case", "detail"]
PHASE_NAMES = ("A", "B", "C")


def _ms(value: Optional[float]) -> Optional[float]:
    return None if value is None else value * 1e3


def summary_rows(report: MetricsReport) -> List[Dict]:
    """把一次运行的指标展开为长表行"""
    rows = []
    label = report.mode.upper()

    def add(item: str, detail: str, phase: str, value) -> None:
        rows.append(
            {"item": item, "case": report.case, "detail": detail, "column": f"{label} {phase}", "value": value}
        )

    for phase, metrics in report.phases.items():
        add("Initial Value (V)", "", phase, metrics.initial_error)
        add("Settling Time (ms)", "", phase, _ms(metrics.settling_time))
        add("Mean Value (V)", "", phase, metrics.mean_abs_error)
        add("Standard Deviation (V)", "", phase, metrics.std_error)
        if metrics.overshoots:
            for edge, value in metrics.overshoots.items():
                add("Max or Overshoot Value (V)", f"overshoot at t={edge:g} s", phase, value)
        else:
            add("Max or Overshoot Value (V)", "max", phase, metrics.max_error)
        add("Switching Frequency (kHz)", "", phase, metrics.switching_frequency / 1e3)
        add("Cost Evaluations", "", phase, metrics.cost_evaluations)
        for estimate in metrics.rls:
            add("RLS Estimation Error (Ohm)", f"at t={estimate.edge:g} s", phase, estimate.signed_error)
            add("RLS Convergence Time (ms)", f"at t={estimate.edge:g} s", phase, _ms(estimate.convergence_time))
    # 三相合并：各跳变处幅值最大的估计误差
    for edge, value in report.rls_overshoots().items():
        add("RLS Estimation Overshoot (Ohm)", f"at t={edge:g} s", "ABC", value)
    return rows


def summary_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """汇总表：每行一个指标，每列一个 模式×相别"""
    rows = [row for report in reports for row in summary_rows(report)]
    if not rows:
        return pd.DataFrame(columns=SUMMARY_INDEX)

    columns: List[str] = []
    table: Dict[Tuple, Dict[str, object]] = {}
    for row in rows:
        if row["column"] not in columns:
            columns.append(row["column"])
        key = (row["item"], row["case"], row["detail"])
        table.setdefault(key, {})[row["column"]] = row["value"]

    records = [dict(zip(SUMMARY_INDEX, key), **values) for key, values in table.items()]
    return pd.DataFrame(records, columns=SUMMARY_INDEX + columns)


def mean_error_reduction(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """ODCM 相对 OPCM 的平均误差降低百分比，按工况与相别"""
    by_key: Dict[Tuple[str, int], MetricsReport] = {(r.mode, r.case): r for r in reports}
    rows = []
    for (mode, case), odcm in sorted(by_key.items(), key=lambda kv: kv[0][1]):
        if mode != "odcm" or ("opcm", case) not in by_key:
            continue
        opcm = by_key[("opcm", case)]
        for phase in PHASE_NAMES:
            if phase not in odcm.phases or phase not in opcm.phases:
                continue
            reference = opcm.phases[phase].mean_abs_error
            reduction = (reference - odcm.phases[phase].mean_abs_error) / reference * 100 if reference > 0 else None
            rows.append({"case": case, "phase": phase, "mean_error_reduction_pct": reduction})
    return pd.DataFrame(rows, columns=["case", "phase", "mean_error_reduction_pct"])


def _write(frame: pd.DataFrame, path: Path, header_lines: Sequence[str] = ()) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            frame.to_csv(f, index=False, lineterminator="\n")
    except OSError as e:
        logger.error(f"写入失败 {path}: {e}")
        raise OSError(f"写入失败 {path}: {e}") from e


def emit_csv(
    log: pd.DataFrame,
    report: MetricsReport,
    out_dir: Union[str, Path],
    cfg: Optional[ScenarioConfig] = None,
) -> Tuple[Path, Path]:
    """写出时间序列与指标汇总

    浮点数以可往返的最短十进制形式写出，相同输入得到逐字节相同的文件。
    汇总文件开头以 "# " 注释行记录完整配置。

    Args:
        log: 闭环日志
        report: 指标报告
        out_dir: 输出目录
        cfg: 场景配置，提供时写入配置来源

    Returns:
        (时间序列文件路径, 汇总文件路径)

    Raises:
        OSError: 目录不可写
    """
    try:
        out_dir = ensure_directory(out_dir)
    except OSError as e:
        logger.error(f"无法创建输出目录 {out_dir}: {e}")
        raise OSError(f"无法创建输出目录 {out_dir}: {e}") from e

    stem = f"{report.mode}_case{report.case}"
    series_path = out_dir / f"{stem}_timeseries.csv"
    summary_path = out_dir / f"{stem}_summary.csv"

    _write(log, series_path)
    provenance = [f"config: {json.dumps(cfg.provenance(), sort_keys=True)}"] if cfg is not None else []
    _write(summary_frame([report]), summary_path, provenance)

    logger.info(f"已写出 {series_path} 与 {summary_path}")
    return series_path, summary_path


def emit_comparison(
    reports: Sequence[MetricsReport], out_dir: Union[str, Path], configs: Sequence[ScenarioConfig] = ()
) -> Tuple[Path, Path]:
    """写出多次运行的对比表与 ODCM 误差降低百分比

    Returns:
        (对比表路径, 误差降低表路径)
    """
    out_dir = ensure_directory(out_dir)
    table_path = out_dir / "comparison.csv"
    reduction_path = out_dir / "mean_error_reduction.csv"

    provenance = [
        f"config {c.mode} case{c.case}: {json.dumps(c.provenance(), sort_keys=True)}" for c in configs
    ]
    _write(summary_frame(reports), table_path, provenance)
    _write(mean_error_reduction(reports), reduction_path)

    logger.info(f"已写出对比表 {table_path}")
    return table_path, reduction_path

"""
命令行入口

invmpc run      运行单个 模式×工况 场景
invmpc compare  运行多个场景并输出对比表

退出码：0 成功，1 配置或I/O错误，2 数值错误
"""

import sys
from typing import List, Optional, Sequence

import click
import pandas as pd

from ..utils.exceptions import InverterMpcError, NumericError
from ..utils.helpers import safe_get
from ..utils.logger import get_logger, setup_logging
from .closed_loop import run_scenario
from .report import emit_comparison, emit_csv, mean_error_reduction
from .scenario import build_scenario, resolve_config


logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


def _split_list(value: str, cast=str) -> List:
    try:
        return [cast(item.strip()) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise click.BadParameter(f"无法解析列表 {value!r}: {e}")


def _prepare(config_path: Optional[str], overrides: Sequence[str], log_level: Optional[str]) -> dict:
    config = resolve_config(config_path, overrides)
    logging_config = dict(config.get("logging", {}))
    if log_level:
        logging_config["level"] = log_level.upper()
    setup_logging(logging_config)
    return config


def _duration(config: dict, duration: Optional[float], full_duration: bool) -> Optional[float]:
    if duration is not None:
        return duration
    if full_duration:
        return safe_get(config, "scenario.full_duration", 1.0)
    return None


common_options = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON配置文件"),
    click.option("--duration", type=float, default=None, help="仿真时长 (s)"),
    click.option("--full-duration", is_flag=True, default=False, help="使用完整时长 scenario.full_duration"),
    click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="输出目录"),
    click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE", help="覆盖配置项"),
    click.option("--log-level", default=None, help="日志级别"),
]


def _with_common_options(func):
    for option in reversed(common_options):
        func = option(func)
    return func


@click.group()
def invmpc():
    """三相逆变器有限控制集预测控制仿真"""


@invmpc.command()
@click.option("--mode", type=click.Choice(["odcm", "opcm"], case_sensitive=False), default=None, help="控制模式")
@click.option("--case", "case", type=click.IntRange(1, 3), default=None, help="工况 1|2|3")
@_with_common_options
def run(mode, case, config_path, duration, full_duration, out_dir, overrides, log_level):
    """运行单个场景并写出时间序列与汇总"""
    config = _prepare(config_path, overrides, log_level)
    cfg = build_scenario(config, mode, case, _duration(config, duration, full_duration), out_dir)
    result = run_scenario(cfg)
    series_path, summary_path = emit_csv(result.log, result.report, cfg.output_path, cfg)
    click.echo(f"{series_path}\n{summary_path}")


@invmpc.command()
@click.option("--cases", default="1,2,3", show_default=True, help="工况列表")
@click.option("--modes", default="odcm,opcm", show_default=True, help="控制模式列表")
@_with_common_options
def compare(cases, modes, config_path, duration, full_duration, out_dir, overrides, log_level):
    """运行多个 模式×工况 场景并输出对比表"""
    config = _prepare(config_path, overrides, log_level)
    case_list = _split_list(cases, int)
    mode_list = [m.lower() for m in _split_list(modes)]
    for mode in mode_list:
        if mode not in ("odcm", "opcm"):
            raise click.BadParameter(f"不支持的控制模式: {mode}")

    reports, configs = [], []
    for case in case_list:
        for mode in mode_list:
            cfg = build_scenario(config, mode, case, _duration(config, duration, full_duration), out_dir)
            result = run_scenario(cfg)
            emit_csv(result.log, result.report, cfg.output_path, cfg)
            reports.append(result.report)
            configs.append(cfg)

    table_path, reduction_path = emit_comparison(reports, configs[0].output_path, configs)
    for row in mean_error_reduction(reports).itertuples(index=False):
        if pd.notna(row.mean_error_reduction_pct):
            logger.info(f"工况{row.case} {row.phase}相: ODCM 平均误差降低 {row.mean_error_reduction_pct:.2f}%")
    click.echo(f"{table_path}\n{reduction_path}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行主函数

    Returns:
        退出码
    """
    try:
        invmpc.main(args=list(argv) if argv is not None else None, prog_name="invmpc", standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Abort:
        click.echo("已中止", err=True)
        return EXIT_INVALID
    except click.ClickException as e:
        e.show()
        return EXIT_INVALID
    except NumericError as e:
        logger.error(f"数值错误: {e}")
        click.echo(f"数值错误: {e}", err=True)
        return EXIT_NUMERIC
    except (InverterMpcError, ValueError, OSError) as e:
        logger.error(f"运行失败: {e}")
        click.echo(f"运行失败: {e}", err=True)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""命令行入口

    strongmax list
    strongmax run <scenario.ini> [--seed S] [--paths P] [--n-max N] [--sim-n-max N] [--out DIR] [--format json|csv|both]
    strongmax run --builtin example3_1
    strongmax history --cache-dir DIR

--n-max 只作用于级数判据，--sim-n-max 只作用于模拟。
退出码：0 成功，1 场景或参数错误（包括阈值在所用范围内不单调），2 计算过程中的错误。
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from .__version__ import __version__
from .errors import ExpressionError, ScenarioConfigError, StrongMaxError
from .scenario import Report, ScenarioConfig, get_builtin, list_builtins, run_scenario
from .store import ResultStore

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strongmax", description="运行最大值阈值事件的 i.o. 判据诊断")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", help="日志级别 (默认 WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="列出内置场景")

    run = sub.add_parser("run", help="运行场景文件或内置场景")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("scenario", nargs="?", help="场景文件 (INI)")
    source.add_argument("--builtin", help="内置场景名称")
    run.add_argument("--seed", type=int, help="覆盖模拟的主种子")
    run.add_argument("--paths", type=int, help="覆盖模拟的路径数")
    run.add_argument("--n-max", type=int, dest="n_max", help="覆盖 [checkers] 的 n_max，即级数判据计算到的最大 n；不影响模拟")
    run.add_argument("--sim-n-max", type=int, dest="sim_n_max", help="覆盖 [simulation] 的 n_max，即模拟路径的长度")
    run.add_argument("--workers", type=int, help="覆盖判据与模拟的线程数")
    run.add_argument("--out", help="输出目录")
    run.add_argument("--format", choices=("json", "csv", "both"), help="输出格式")
    run.add_argument("--cache-dir", help="结果存储目录，保存模拟结果与报告")
    run.add_argument("--log-level", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    history = sub.add_parser("history", help="列出结果存储中的报告")
    history.add_argument("--cache-dir", required=True, help="结果存储目录")
    history.add_argument("--name", help="只列出该场景的报告")
    return parser


def apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    """把命令行参数覆盖到场景上，并重新校验"""
    update = {}
    sim_args = (("seed", args.seed), ("paths", args.paths), ("n_max", args.sim_n_max), ("workers", args.workers))
    sim = {k: v for k, v in sim_args if v is not None}
    if sim:
        if config.simulation is None:
            logger.warning(f"场景 {config.name} 没有 [simulation]，忽略 {sorted(sim)}")
        else:
            update["simulation"] = config.simulation.model_copy(update=sim)
    checks = {k: v for k, v in (("n_max", args.n_max), ("workers", args.workers)) if v is not None}
    if checks:
        if config.checkers is None:
            logger.warning(f"场景 {config.name} 没有 [checkers]，忽略 {sorted(checks)}")
        else:
            update["checkers"] = config.checkers.model_copy(update=checks)
    out = {k: v for k, v in (("dir", args.out), ("format", args.format)) if v is not None}
    if out:
        update["output"] = config.output.model_copy(update=out)
    if not update:
        return config
    return ScenarioConfig.model_validate(config.model_copy(update=update).model_dump())


def _print_report(report: Report) -> None:
    print(f"场景 {report.scenario}: {report.distribution}, 阈值 {report.thresholds}")
    for name, result in report.criteria.items():
        verdict = getattr(result, "verdict", None) or result.classification
        conclusion = getattr(result, "conclusion", None) or "-"
        print(f"  {name:<14} {verdict.value:<14} {conclusion}")
    if report.simulation is not None:
        sim = report.simulation
        print(f"  模拟: {sim.paths} 条路径 x {sim.n_max} 步, 种子 {sim.master_seed}")


def _cmd_list() -> int:
    for entry in list_builtins():
        print(f"{entry.name:<20} {entry.transform:<34} {entry.description}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    if args.builtin:
        config = get_builtin(args.builtin).config()
    else:
        config = ScenarioConfig.from_file(args.scenario)
    config = apply_overrides(config, args)

    store = ResultStore(args.cache_dir) if args.cache_dir else None
    try:
        report = run_scenario(config, store=store)
    finally:
        if store is not None:
            store.close()
    _print_report(report)
    if config.output.dir is not None:
        print(f"输出目录: {config.output.dir}")
    return EXIT_OK


def _cmd_history(args: argparse.Namespace) -> int:
    with ResultStore(args.cache_dir, create=False) as store:
        for key in store.history(args.name):
            print(key)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "history":
            return _cmd_history(args)
        return _cmd_run(args)
    except (ScenarioConfigError, ExpressionError, ValidationError, FileNotFoundError) as e:
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (StrongMaxError, FloatingPointError) as e:
        logger.error(f"计算失败: {e}")
        print(f"运行错误: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

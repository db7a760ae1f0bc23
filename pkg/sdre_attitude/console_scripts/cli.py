"""sdre-attitude command line: gain builds, simulations and campaigns.

Exit codes:
    0  success
    1  unexpected error
    2  command line usage
    3  configuration parse error
    4  configuration validation error
    5  Riccati solver, certification or gain table build failure
    6  closed-loop divergence
    7  Monte-Carlo runs that did not settle
    8  gain table file format error
"""
import argparse
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas
from slugify import slugify

from sdre_attitude import __version__
from sdre_attitude.config import RunConfig, WeightCase, load_config
from sdre_attitude.control import TORQUE_GUIDELINE
from sdre_attitude.exceptions import (
    ConfigParseException,
    ConfigValidationException,
    DivergenceException,
    GainTableBuildException,
    GainTableFormatException,
    RiccatiException,
    SdreException,
    SingularLyapunovException,
)
from sdre_attitude.gaintable import GainTable, build_table, load_table, save_table
from sdre_attitude.sim import Trajectory, run_closed_loop
from sdre_attitude.sim.metrics import Metrics, compute_metrics
from sdre_attitude.sim.montecarlo import MonteCarloCampaign, MonteCarloReport, RunRecord

logger = logging.getLogger("sdre_attitude").getChild(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_CONFIG_PARSE = 3
EXIT_CONFIG_VALIDATION = 4
EXIT_SOLVER = 5
EXIT_DIVERGENCE = 6
EXIT_NOT_SETTLED = 7
EXIT_TABLE_FORMAT = 8

TRAJECTORY_COLUMNS = [
    "t",
    "sig1",
    "sig2",
    "sig3",
    "w1_dps",
    "w2_dps",
    "w3_dps",
    "tau1",
    "tau2",
    "tau3",
]
FLOAT_FORMAT = "%.17g"
CASES_FILE = "cases.csv"


def verdict(metrics: Metrics) -> str:
    if metrics.exceeds_guideline(TORQUE_GUIDELINE):
        return f"peak torque exceeds {TORQUE_GUIDELINE} N·m"
    return f"peak torque below {TORQUE_GUIDELINE} N·m"


def provenance(config: RunConfig) -> Dict[str, object]:
    entries = " ".join(format(float(v), ".17g") for v in config.inertia.entries())
    return {
        "tool": f"sdre-attitude {__version__}",
        "config_sha256": config.digest,
        "seed": config.seed,
        "inertia": entries,
        "weights": config.weights,
    }


def _write_with_header(path: Path, header: Dict[str, object], frame: pandas.DataFrame):
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)


def trajectory_frame(traj: Trajectory) -> pandas.DataFrame:
    data = np.column_stack((traj.time, traj.sigma, np.degrees(traj.omega), traj.tau))
    return pandas.DataFrame(data, columns=TRAJECTORY_COLUMNS)


def write_trajectory_csv(traj: Trajectory, path, header: Dict[str, object]) -> None:
    _write_with_header(Path(path), header, trajectory_frame(traj))
    logger.info(f"Wrote {len(traj)} trajectory rows to {path}")


def read_trajectory_csv(path) -> pandas.DataFrame:
    frame = pandas.read_csv(path, comment="#", float_precision="round_trip")
    assert list(frame.columns) == TRAJECTORY_COLUMNS, f"Unexpected columns in {path}"
    return frame


def plot_trajectory(traj: Trajectory, path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
    for i in range(3):
        axes[0].plot(traj.time, traj.sigma[:, i], label=f"sigma{i + 1}")
        axes[1].plot(traj.time, np.degrees(traj.omega[:, i]), label=f"w{i + 1}")
        axes[2].plot(traj.time, traj.tau[:, i], label=f"tau{i + 1}")
    axes[0].set_ylabel("MRP error")
    axes[1].set_ylabel("rate error [deg/s]")
    axes[2].set_ylabel("torque [N*m]")
    axes[2].set_xlabel("time [s]")
    for ax in axes:
        ax.grid(True)
        ax.legend(loc="upper right")
    axes[0].set_title(title)
    fig.savefig(path)
    plt.close(fig)
    logger.info(f"Wrote plot {path}")


def _format_time(value: Optional[float]) -> str:
    return "not settled" if value is None else f"{value:.2f} s"


def metrics_summary(metrics: Metrics) -> List[str]:
    peak = " ".join(f"{v:.6g}" for v in metrics.peak_torque_per_axis)
    return [
        f"peak torque per axis [N·m]: {peak}",
        f"settling time: {_format_time(metrics.settling_time)}",
        f"final attitude error: {metrics.final_attitude_error:.6g}",
        verdict(metrics),
    ]


def obtain_table(config: RunConfig, table_path=None) -> GainTable:
    if table_path is not None:
        table = load_table(table_path)
        if table.inertia != config.inertia:
            logger.warning(f"Table {table_path} was built for {table.inertia}")
        return table
    return build_table(
        config.grid,
        config.inertia,
        config.weights,
        config.tolerance,
        config.build_workers,
    )


def cmd_gains(config: RunConfig, table_path=None) -> GainTable:
    destination = (
        Path(table_path) if table_path else config.output_directory / config.table_file
    )
    table = build_table(
        config.grid,
        config.inertia,
        config.weights,
        config.tolerance,
        config.build_workers,
    )
    save_table(table, destination, provenance(config))

    stats = table.stats
    print(f"vertices: {table.grid.size}")
    print(
        f"iterations: max {int(stats.iterations.max())}, "
        f"mean {float(stats.iterations.mean()):.2f}"
    )
    print(f"residual: max {float(stats.residuals.max()):.3e}")
    print(f"table: {destination}")
    return table


def cmd_simulate(config: RunConfig, table_path=None, plot=False) -> Metrics:
    table = obtain_table(config, table_path)
    traj = run_closed_loop(config.scenario(table))
    metrics = compute_metrics(traj, config.settle_threshold)

    destination = config.output_directory / config.trajectory_file
    write_trajectory_csv(traj, destination, provenance(config))
    if plot:
        plot_trajectory(traj, destination.with_suffix(".png"), str(config.weights))

    for line in metrics_summary(metrics):
        print(line)
    return metrics


def cmd_cases(config: RunConfig, plot=False) -> pandas.DataFrame:
    rows = []
    for case in WeightCase:
        case_config = config.replace(weights=case.weights)
        table = obtain_table(case_config)
        traj = run_closed_loop(case_config.scenario(table))
        metrics = compute_metrics(traj, config.settle_threshold)

        name = slugify(case.title)
        destination = config.output_directory / f"{name}.csv"
        write_trajectory_csv(traj, destination, provenance(case_config))
        if plot:
            plot_trajectory(traj, destination.with_suffix(".png"), case.title)

        q1, q2, r = case.weights.coefficients
        rows.append(
            {
                "case": case.value,
                "q1": q1,
                "q2": q2,
                "r": r,
                "peak_torque": metrics.peak_torque_inf,
                "settling_time": metrics.settling_time,
                "final_attitude_error": metrics.final_attitude_error,
                "verdict": verdict(metrics),
            }
        )
        logger.info(f"{case.title}: {verdict(metrics)}")

    frame = pandas.DataFrame(rows)
    # not settled counts as slower than any settled case
    settling = frame["settling_time"].astype(float).fillna(math.inf)
    frame["slowest"] = settling == settling.max()

    header = provenance(config)
    del header["weights"]
    for case in WeightCase:
        header[f"weights_case_{case.value}"] = case.weights
    _write_with_header(config.output_directory / CASES_FILE, header, frame)
    print(frame.to_string(index=False))
    return frame


def _record_row(record: RunRecord) -> dict:
    row = {"run": record.index}
    entries = record.plant_inertia.entries() if record.plant_inertia else [None] * 6
    for key, value in zip(("jxx", "jyy", "jzz", "jxy", "jxz", "jyz"), entries):
        row[key] = value
    m = record.metrics
    row["peak_torque"] = m.peak_torque_inf if m else None
    row["settling_time"] = m.settling_time if m else None
    row["final_attitude_error"] = m.final_attitude_error if m else None
    row["settled"] = record.settled
    row["error"] = record.error or ""
    return row


def montecarlo_summary(report: MonteCarloReport) -> List[str]:
    lines = [
        f"runs: {report.runs}",
        f"settled: {report.settled_count}",
        f"worst peak torque: {report.worst_peak_torque:.6g} N·m",
        f"worst settling time: {_format_time(report.worst_settling_time)}",
        f"worst final attitude error: {report.worst_final_attitude_error:.6g}",
        f"seed: {report.seed}",
        f"generator: {report.generator}",
        f"level: {report.level}",
    ]
    lines.extend(
        f"failed run {record.index}: {record.error}"
        for record in report.records
        if record.failed
    )
    return lines


def cmd_montecarlo(config: RunConfig, table_path=None) -> MonteCarloReport:
    table = obtain_table(config, table_path)
    campaign = MonteCarloCampaign(
        config.scenario(table),
        config.runs,
        config.level,
        config.seed,
        config.settle_threshold,
        config.montecarlo_workers,
    )
    campaign.subscribe(
        MonteCarloCampaign.RUN_COMPLETE_EVENT,
        lambda record: logger.debug(f"Run {record.index} settled: {record.settled}"),
    )
    report = campaign.run()

    header = provenance(config)
    header["level"] = config.level
    header["generator"] = report.generator

    destination = config.output_directory / config.metrics_file
    frame = pandas.DataFrame([_record_row(record) for record in report.records])
    _write_with_header(destination, header, frame)

    summary = montecarlo_summary(report)
    summary_path = destination.with_name(f"{destination.stem}_summary.txt")
    with open(summary_path, "w") as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        fh.write("\n".join(summary) + "\n")

    for line in summary:
        print(line)
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--table", type=Path, help="gain table file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="Monte-Carlo seed")
    common.add_argument("--plot", action="store_true", help="write PNG plots")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(
        prog="sdre-attitude", description="SDRE satellite attitude control"
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("gains", parents=[common], help="build a gain table")
    subparsers.add_parser("simulate", parents=[common], help="run one closed loop")
    subparsers.add_parser("cases", parents=[common], help="compare the weight cases")
    subparsers.add_parser("montecarlo", parents=[common], help="inertia campaign")
    return parser


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    changes = {}
    if args.out is not None:
        changes["output_directory"] = args.out
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigValidationException("--seed", "must not be negative")
        changes["seed"] = args.seed
    return config.replace(**changes) if changes else config


def run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    config.output_directory.mkdir(parents=True, exist_ok=True)
    plot = args.plot or config.plot

    if args.command == "gains":
        cmd_gains(config, args.table)
    elif args.command == "simulate":
        cmd_simulate(config, args.table, plot)
    elif args.command == "cases":
        cmd_cases(config, plot)
    elif args.command == "montecarlo":
        report = cmd_montecarlo(config, args.table)
        if report.settled_count < report.runs:
            logger.error(f"{report.runs - report.settled_count} run(s) did not settle")
            return EXIT_NOT_SETTLED
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)

    try:
        return run(args)
    except ConfigParseException as e:
        logger.error(f"Configuration parse error: {e}")
        return EXIT_CONFIG_PARSE
    except ConfigValidationException as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG_VALIDATION
    except (RiccatiException, SingularLyapunovException, GainTableBuildException) as e:
        logger.error(f"Gain synthesis failed: {e}")
        return EXIT_SOLVER
    except DivergenceException as e:
        logger.error(f"Simulation diverged at t={e.time}: {e}")
        return EXIT_DIVERGENCE
    except GainTableFormatException as e:
        logger.error(f"Bad gain table file: {e}")
        return EXIT_TABLE_FORMAT
    except (SdreException, OSError) as e:
        logger.error(e)
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.exception(e)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main())

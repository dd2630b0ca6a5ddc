"""Command-line front door.

Every subcommand prints a human-readable summary to stdout, optionally
writes the full JSON report and a flat CSV, and exits with a stable code:

    0  all checks pass / consistent
    1  a violation was found
    2  Monte Carlo verdict inconclusive
    3  precondition or symmetry failure (including enumeration caps)
    4  usage error (bad flags, unreadable or malformed scenario files)
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import exact, scenarios
from .exact import CapExceeded, parse_law
from .graphs import GraphError
from .groups import GroupError
from .scenarios import (
    INCONCLUSIVE,
    PASS,
    PRECONDITION_FAILED,
    VIOLATION,
    ScenarioError,
    ScenarioFormatError,
)

EXIT_CODES = {PASS: 0, VIOLATION: 1, INCONCLUSIVE: 2, PRECONDITION_FAILED: 3}
USAGE_ERROR = 4


def to_stable_json(report: dict) -> str:
    """Canonical serialization; parsing and re-serializing is a no-op."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_outputs(report: dict, json_path: str | None,
                  csv_path: str | None) -> None:
    if json_path:
        Path(json_path).write_text(to_stable_json(report))
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["scenario", "p", "quantity", "value", "lo", "hi", "mode",
                 "verdict"])
            writer.writerows(csv_rows(report))


def _scenario_name(report: dict) -> str:
    sc = report.get("scenario", {})
    return str(sc.get("name", report.get("kind", "scenario")))


def csv_rows(report: dict) -> list[list]:
    """Flatten a report into the stable CSV columns."""
    name = _scenario_name(report)
    mode = report.get("mode", "")
    rows: list[list] = []

    def emit(p, quantity, value, lo="", hi="", verdict=""):
        rows.append([name, p, quantity, value, lo, hi, mode, verdict])

    def emit_result(res: dict, prefix: str = ""):
        p = res.get("p", "")
        for key in ("expected_plus", "expected_minus", "expectation_gap"):
            if key in res:
                val = res[key]
                if isinstance(val, dict):
                    emit(p, prefix + key, val["estimate"], val["ci"][0],
                         val["ci"][1], res.get("verdict", ""))
                else:
                    emit(p, prefix + key, val, verdict=res.get("verdict", ""))
        dom = res.get("domination")
        if dom and "margins" in dom:
            for t, margin in sorted(dom["margins"].items(),
                                    key=lambda kv: int(kv[0])):
                emit(p, f"{prefix}margin_t{t}", margin,
                     verdict="pass" if dom["passes"] else "violation")
        if dom and "thresholds" in dom:
            for row in dom["thresholds"]:
                emit(p, f"{prefix}margin_t{row['t']}", row["margin"],
                     row["ci"][0], row["ci"][1], row["verdict"])
        for key, val in res.get("identity_residuals", {}).items():
            emit(p, f"{prefix}residual_{key}", val,
                 verdict="pass" if res.get("identity_zero") else "violation")
        for key in ("ratio_lhs", "ratio_rhs", "relation_slack", "c_far",
                    "c_near"):
            if key in res:
                emit(p, prefix + key, res[key])
        if "c_values" in res:
            for i, val in enumerate(res["c_values"]):
                if isinstance(val, dict):
                    emit(p, f"{prefix}c_{i}", val["estimate"], val["ci"][0],
                         val["ci"][1])
                else:
                    emit(p, f"{prefix}c_{i}", val)
        for row in res.get("rows", []):
            tag = f"k{row['k']}_l{row['l']}"
            if "pass" in row:
                emit(p, f"{prefix}double_sum_{tag}", row["double_sum"],
                     verdict="pass" if row["pass"] else "violation")
            else:
                emit(p, f"{prefix}double_sum_{tag}", row["double_sum"],
                     verdict=row.get("double_sum_verdict", ""))
        for row in res.get("derivatives", []):
            emit(p, f"{prefix}derivative_k{row['k']}", row["value"],
                 verdict="pass" if row["sign_ok"] else "violation")

    for res in report.get("results", []):
        emit_result(res)
    for rel in report.get("relations", []):
        for res in rel.get("results", []):
            emit_result(res, prefix=rel["name"] + "_")
    if "all_exact" in report:
        emit("", "all_exact", str(report["all_exact"]).lower(),
             verdict=report["verdict"])
    return rows


def print_human(report: dict) -> None:
    name = _scenario_name(report)
    click.echo(f"{report.get('kind', 'report')}: {name}  "
               f"mode={report.get('mode', '?')}  verdict={report['verdict']}")
    cond = report.get("conditions")
    if cond:
        click.echo(
            "  conditions: set-preserving={set_preserving} "
            "transitive={transitive} "
            "stabilizer-symmetric={stabilizer_symmetric} "
            "swap-transitive={swap_transitive} "
            "group-order={group_order}".format(**cond))
        for note in cond.get("notes", []):
            click.echo(f"    note: {note}")
    if "config_count" in report:
        click.echo(f"  configurations: {report['config_count']}")
    if "mc" in report:
        click.echo("  mc: n={n} seed={seed} level={level}".format(
            **report["mc"]))
    for res in report.get("results", []):
        _print_result(res, indent="  ")
    for rel in report.get("relations", []):
        click.echo(f"  {rel['name']}: {rel['statement']}  "
                   f"verdict={rel['verdict']}")
        for res in rel.get("results", []):
            _print_result(res, indent="    ")
    if "double_counting_trials" in report:
        click.echo(
            "  orbit-product pairs checked: {}  failures: {}".format(
                report["orbit_product_pairs"],
                report["orbit_product_failures"]))
        click.echo(
            "  double-counting trials: {}  failures: {}".format(
                report["double_counting_trials"],
                report["double_counting_failures"]))
    click.echo(f"  elapsed: {report.get('elapsed_seconds', 0):.3f}s")


def _print_result(res: dict, indent: str) -> None:
    p = res.get("p", "?")
    bits = [f"p={p}"]
    for key in ("expected_plus", "expected_minus"):
        if key in res:
            val = res[key]
            if isinstance(val, dict):
                bits.append(f"{key}={val['estimate']:.6g}"
                            f"[{val['ci'][0]:.6g},{val['ci'][1]:.6g}]")
            else:
                bits.append(f"{key}={val}")
    dom = res.get("domination")
    if dom and "passes" in dom:
        bits.append(f"margins>=0={dom['passes']}")
    if dom and "overall" in dom:
        bits.append(f"domination={dom['overall']}")
    if "identity_zero" in res:
        bits.append(f"identity-zero={res['identity_zero']}")
    if "ratio_equal" in res:
        bits.append(f"ratio-equal={res['ratio_equal']}")
    if "relation_slack" in res:
        bits.append(f"slack={res['relation_slack']}")
    if "verdict" in res:
        bits.append(f"verdict={res['verdict']}")
    click.echo(indent + "  ".join(bits))


def finish(report: dict, json_path: str | None, csv_path: str | None) -> int:
    print_human(report)
    write_outputs(report, json_path, csv_path)
    return EXIT_CODES[report["verdict"]]


def _parse_p_list(text: str | None, default=("1/2",)) -> list[str]:
    if not text:
        return list(default)
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_base(text: str):
    """Accept "cycle:5"-style shorthand or an inline JSON graph spec."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"bad base spec JSON: {exc}") from None
    if ":" in text:
        builder, _, arg = text.partition(":")
        builder = builder.strip()
        if builder in ("path", "cycle", "complete"):
            return {"builder": builder, "n": int(arg)}
        if builder == "hypercube":
            return {"builder": builder, "d": int(arg)}
    raise ScenarioFormatError(
        f"bad base spec {text!r}; use e.g. 'cycle:5' or a JSON object")


scenario_opt = click.option("--scenario", "scenario_ref", required=True,
                            help="scenario file path or builtin:NAME")
p_opt = click.option("--p", "p_list", default=None,
                     help="comma-separated rationals, e.g. 1/4,1/2,3/4")
mode_opt = click.option("--mode", type=click.Choice(["exact", "mc"]),
                        default="exact")
n_opt = click.option("--n", "mc_n", type=int, default=100_000,
                     help="Monte Carlo sample count")
seed_opt = click.option("--seed", type=int, default=0)
threads_opt = click.option("--threads", type=int, default=1,
                           help="worker cap for chunked sweeps/sampling")
json_opt = click.option("--json", "json_path", type=click.Path(), default=None)
csv_opt = click.option("--csv", "csv_path", type=click.Path(), default=None)
cap_opt = click.option("--cap", "cap_bits", type=int,
                       default=exact.DEFAULT_CAP_BITS,
                       help="enumeration cap in bits (2^cap configurations)")
level_opt = click.option("--level", type=click.Choice(["0.95", "0.99"]),
                         default="0.95", help="confidence level")


@click.group()
def cli():
    """Verification lab for cluster-size comparison under symmetry.

    Scenario-driven subcommands accept --scenario builtin:NAME; run
    `symperc enumerate --help` for the builtin corpus.
    """


def _builtin_help() -> str:
    return ", ".join(sorted(scenarios.builtin_scenarios()))


@cli.command("check-symmetry")
@scenario_opt
@json_opt
def cmd_check_symmetry(scenario_ref, json_path):
    """Run only the symmetry-condition check for a scenario."""
    sc = scenarios.load_scenario(scenario_ref)
    report = scenarios.check_symmetry_report(sc)
    return finish(report, json_path, None)


@cli.command("enumerate", epilog="Builtin scenarios: " + _builtin_help())
@scenario_opt
@p_opt
@cap_opt
@threads_opt
@json_opt
@csv_opt
def cmd_enumerate(scenario_ref, p_list, cap_bits, threads, json_path,
                  csv_path):
    """Exact pipeline: enumerate all configurations and run every check."""
    sc = scenarios.load_scenario(scenario_ref)
    sc = _override(sc, p_list=p_list, cap_bits=cap_bits, mode="exact")
    report = scenarios.run_scenario(sc, threads=threads)
    return finish(report, json_path, csv_path)


@cli.command("mc")
@scenario_opt
@p_opt
@n_opt
@seed_opt
@level_opt
@threads_opt
@json_opt
@csv_opt
def cmd_mc(scenario_ref, p_list, mc_n, seed, level, threads, json_path,
           csv_path):
    """Monte Carlo pipeline with reproducible seeding."""
    sc = scenarios.load_scenario(scenario_ref)
    sc = _override(sc, p_list=p_list, mode="mc", mc_n=mc_n, mc_seed=seed)
    report = scenarios.run_scenario(sc, threads=threads, level=float(level))
    return finish(report, json_path, csv_path)


@cli.command("verify-identity")
@scenario_opt
@p_opt
@cap_opt
@threads_opt
@json_opt
@csv_opt
def cmd_verify_identity(scenario_ref, p_list, cap_bits, threads, json_path,
                        csv_path):
    """Check the reweighting identity and the ratio identity exactly."""
    sc = scenarios.load_scenario(scenario_ref)
    sc = _override(sc, p_list=p_list, cap_bits=cap_bits, mode="exact")
    report = scenarios.verify_identity_report(sc, threads=threads)
    return finish(report, json_path, csv_path)


@cli.command("verify-group-theorem")
@click.option("--group", "group_name", required=True,
              help="named action: d4-on-c4 or bunkbed-c3")
@click.option("--trials", type=int, default=100)
@seed_opt
@json_opt
@csv_opt
def cmd_verify_group_theorem(group_name, trials, seed, json_path, csv_path):
    """Exhaustive orbit/stabilizer identities plus sampled set-pair
    double counting."""
    report = scenarios.group_theorem_battery(group_name, trials, seed)
    return finish(report, json_path, csv_path)


@cli.command("hypercube")
@click.option("--d", "d", type=int, required=True)
@p_opt
@mode_opt
@cap_opt
@n_opt
@seed_opt
@level_opt
@threads_opt
@json_opt
@csv_opt
def cmd_hypercube(d, p_list, mode, cap_bits, mc_n, seed, level, threads,
                  json_path, csv_path):
    """Connection-probability inequalities on the d-dimensional hypercube."""
    report = scenarios.hypercube_inequality_report(
        d, _parse_p_list(p_list), mode, cap_bits, mc_n, seed, float(level),
        threads)
    return finish(report, json_path, csv_path)


@cli.command("z2")
@click.option("--size", type=int, default=3,
              help="torus side length (>= 3)")
@p_opt
@mode_opt
@cap_opt
@n_opt
@seed_opt
@level_opt
@threads_opt
@json_opt
@csv_opt
def cmd_z2(size, p_list, mode, cap_bits, mc_n, seed, level, threads,
           json_path, csv_path):
    """Square-lattice connection relations realized on a torus."""
    report = scenarios.z2_relation_report(
        size, _parse_p_list(p_list), mode, cap_bits, mc_n, seed,
        float(level), threads)
    return finish(report, json_path, csv_path)


@cli.command("bunkbed")
@click.option("--base", required=True,
              help="base graph, e.g. cycle:5 or a JSON spec")
@p_opt
@mode_opt
@click.option("--law", "law_text", default="bond",
              help="bond | site | rc:Q")
@cap_opt
@n_opt
@seed_opt
@level_opt
@threads_opt
@json_opt
@csv_opt
def cmd_bunkbed(base, p_list, mode, law_text, cap_bits, mc_n, seed, level,
                threads, json_path, csv_path):
    """Compare the two layers of base x edge."""
    report = scenarios.bunkbed_report(
        _parse_base(base), _parse_p_list(p_list), mode, parse_law(law_text),
        cap_bits, mc_n, seed, float(level), threads)
    return finish(report, json_path, csv_path)


@cli.command("layered")
@click.option("--base", required=True,
              help="base graph, e.g. path:1 for a bare cycle")
@click.option("--m", "m", type=int, required=True, help="cycle length")
@click.option("--choice", type=click.Choice(["a", "b", "c"]), required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--period", type=int, default=None,
              help="residue period n (choices b and c)")
@p_opt
@mode_opt
@cap_opt
@n_opt
@seed_opt
@level_opt
@threads_opt
@json_opt
@csv_opt
def cmd_layered(base, m, choice, k, period, p_list, mode, cap_bits, mc_n,
                seed, level, threads, json_path, csv_path):
    """Residue-class layer comparison on the cylinder base x cycle(m)."""
    report = scenarios.layered_report(
        _parse_base(base), m, choice, k, period, _parse_p_list(p_list),
        mode, cap_bits, mc_n, seed, float(level), threads)
    return finish(report, json_path, csv_path)


def _override(sc: scenarios.Scenario, p_list=None, cap_bits=None, mode=None,
              mc_n=None, mc_seed=None) -> scenarios.Scenario:
    from dataclasses import replace

    from .rationals import parse_probability

    changes = {}
    if p_list:
        changes["p_grid"] = tuple(parse_probability(p)
                                  for p in _parse_p_list(p_list))
    if cap_bits is not None:
        changes["cap_bits"] = cap_bits
    if mode is not None:
        if mode == "mc" and sc.law.kind != "bond":
            raise ScenarioFormatError(
                "mc mode samples bond percolation only; this scenario "
                f"uses the {sc.law.kind} law")
        changes["mode"] = mode
    if mc_n is not None:
        changes["mc_n"] = mc_n
    if mc_seed is not None:
        changes["mc_seed"] = mc_seed
    return replace(sc, **changes)


def main(argv=None) -> int:
    """Dispatch and map every failure class to its stable exit code."""
    try:
        result = cli.main(args=argv, standalone_mode=False)
        return int(result) if result is not None else 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return USAGE_ERROR
    except click.ClickException as exc:
        exc.show()
        return USAGE_ERROR
    except ScenarioFormatError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        return USAGE_ERROR
    except (ScenarioError, CapExceeded, GraphError, GroupError) as exc:
        click.echo(f"precondition failure: {exc}", err=True)
        return EXIT_CODES[PRECONDITION_FAILED]


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

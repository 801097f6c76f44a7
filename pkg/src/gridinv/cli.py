"""Command-line pipeline: discretize -> mine -> detect, plus fixtures and synth.

Exit codes: 0 clean, 1 anomalies detected (or fixture failures), 2 usage or
validation error. All flags can be set via GRIDINV_* environment variables.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click

from . import detect as detect_mod
from . import discretize as disc
from . import ingest
from . import mine as mine_mod
from . import report
from . import rules as rules_mod
from . import synth as synth_mod
from .errors import GridInvError


def _die(message, code=2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except GridInvError as exc:
        _die(str(exc))


@click.group(context_settings={"auto_envvar_prefix": "GRIDINV"})
@click.option("--threads", default=1, show_default=True,
              help="Worker threads for rule generation; output is identical for any N.")
@click.pass_context
def main(ctx, threads):
    """Mine invariants from grid telemetry and run them as anomaly monitors."""
    if threads < 1:
        _die("--threads must be >= 1")
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


def _parse_band(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        _die(f"--band expects PATTERN:NOMINAL[:TOLERANCE], got {text!r}")
    try:
        nominal = float(parts[1])
        tol = float(parts[2]) if len(parts) == 3 else 0.05
    except ValueError:
        _die(f"--band has non-numeric parameters: {text!r}")
    return disc.BandDefinition(parts[0], nominal, tol)


@main.command("discretize")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="transactions.tsv", show_default=True)
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              help="Discretization spec file; default is built from the data.")
@click.option("--spec-out", type=click.Path(dir_okay=False),
              help="Write the spec that was applied.")
@click.option("--band", "bands", multiple=True,
              help="Tolerance band PATTERN:NOMINAL[:TOLERANCE] for default spec building.")
@click.option("--window", default=3, show_default=True,
              help="Transition-resolution window (samples).")
@click.option("--no-prune", is_flag=True, help="Keep constant attributes.")
def cmd_discretize(input_csv, output, spec_path, spec_out, bands, window, no_prune):
    """Convert a telemetry CSV into binary-valued transactions."""
    if window < 1:
        _die(f"--window must be >= 1, got {window}")
    dataset = _guard(ingest.parse_dataset, input_csv)
    if spec_path:
        spec = _guard(disc.load_spec, spec_path)
        names = set(dataset.attribute_names())
        for attr in spec.rules:
            if attr not in names:
                _die(f"spec file names unknown attribute {attr!r}")
    else:
        band_defs = [_parse_band(b) for b in bands]
        spec = _guard(disc.build_default_spec, dataset.schema, band_defs, dataset)
    transactions = _guard(disc.discretize_dataset, dataset, spec)
    transactions = _guard(disc.resolve_transitions, transactions, window)
    constants = {}
    if not no_prune and transactions:
        transactions, constants = _guard(disc.prune_constants, transactions)
    disc.save_transactions(transactions, output, constants)
    if spec_out:
        disc.save_spec(spec, spec_out)
    click.echo(f"wrote {len(transactions)} transactions to {output}")
    click.echo(f"pruned {len(constants)} constant attributes")


@main.command("mine")
@click.argument("transactions_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="rules.csv", show_default=True)
@click.option("--min-support", default=0.6, show_default=True)
@click.option("--min-confidence", default=1.0, show_default=True)
@click.option("--min-lift", default=1.0, show_default=True)
@click.option("--max-size", default=4, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv",
              show_default=True)
@click.option("--dedup", is_flag=True,
              help="Drop confidence-1 rules subsumed by a smaller antecedent.")
@click.option("--top", default=5, show_default=True, help="Rules to print.")
@click.option("--report-dir", type=click.Path(file_okay=False),
              help="Render figures (support distribution, top rules) here.")
@click.pass_context
def cmd_mine(ctx, transactions_file, output, min_support, min_confidence, min_lift,
             max_size, fmt, dedup, top, report_dir):
    """Mine frequent itemsets and emit filtered association rules."""
    config = _guard(rules_mod.MiningConfig, min_support, min_confidence, min_lift, max_size)
    transactions, constants = _guard(disc.load_transactions, transactions_file)
    if not transactions:
        _die("transactions file is empty")
    click.echo(
        f"mining: support={min_support} confidence={min_confidence} "
        f"lift>={min_lift} max-size={max_size}"
    )
    table = _guard(mine_mod.mine_frequent, transactions, min_support, max_size)
    ruleset = _guard(
        rules_mod.generate_rules,
        table,
        config,
        workers=ctx.obj["threads"],
        constants=constants,
        fingerprint=rules_mod.transactions_fingerprint(transactions),
    )
    if dedup:
        ruleset = rules_mod.remove_redundant(ruleset)
    rules_mod.save_rules(ruleset, output, fmt)
    click.echo(f"{len(table)} frequent itemsets, {len(ruleset)} rules -> {output}")
    if top and ruleset.rules:
        click.echo(f"{'Supp':>6} {'Conf':>6} {'Lift':>6}  Rule")
        for r in ruleset.rules[:top]:
            click.echo(f"{r.support:6.3f} {r.confidence:6.3f} {r.lift:6.3f}  {r}")
    if report_dir:
        for path in report.render_mine_report(table, ruleset, report_dir):
            click.echo(f"figure: {path}")


def _parse_rotate(text):
    parts = text.split(",")
    if len(parts) != 3:
        _die(f"--rotate expects FRACTION,EPOCH_LENGTH,SEED, got {text!r}")
    try:
        return detect_mod.RotationPolicy(float(parts[0]), int(parts[1]), int(parts[2]))
    except ValueError:
        _die(f"--rotate has non-numeric parameters: {text!r}")
    except GridInvError as exc:
        _die(str(exc))


@main.command("detect")
@click.argument("transactions_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("rules_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="violations.jsonl", show_default=True)
@click.option("--summary-json", type=click.Path(dir_okay=False),
              help="Write the machine-readable summary here.")
@click.option("--rotate", "rotate_spec", default=None,
              help="Rotate active rule subsets: FRACTION,EPOCH_LENGTH,SEED.")
@click.option("--report-dir", type=click.Path(file_okay=False),
              help="Render figures (violation timeline, rule histogram) here.")
def cmd_detect(transactions_file, rules_file, output, summary_json, rotate_spec,
               report_dir):
    """Evaluate mined rules over a transaction stream; exit 1 on anomalies."""
    transactions, _ = _guard(disc.load_transactions, transactions_file)
    ruleset = _guard(rules_mod.load_rules, rules_file)
    policy = _parse_rotate(rotate_spec) if rotate_spec else None
    violations, summary = _guard(detect_mod.evaluate_stream, transactions, ruleset, policy)
    Path(output).write_text(detect_mod.violations_to_jsonl(violations), encoding="utf-8")
    if summary_json:
        Path(summary_json).write_text(summary.to_json() + "\n", encoding="utf-8")
    click.echo(summary.to_text(), nl=False)
    if report_dir:
        for path in report.render_detect_report(violations, summary, report_dir):
            click.echo(f"figure: {path}")
    sys.exit(1 if violations else 0)


def default_fixtures_path():
    return resources.files("gridinv").joinpath("data/published_invariants.csv")


@main.command("validate-fixtures")
@click.argument("fixtures_file", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--tolerance", default=0.001, show_default=True,
              help="Metric-identity tolerance for table-rounded values.")
def cmd_validate_fixtures(fixtures_file, tolerance):
    """Check the published invariant rows for metric consistency."""
    if fixtures_file:
        text = Path(fixtures_file).read_text(encoding="utf-8")
    else:
        text = default_fixtures_path().read_text(encoding="utf-8")
    ruleset = _guard(rules_mod.import_rules, text, "csv")
    failures = 0
    for i, rule in enumerate(ruleset.rules, start=1):
        rep = rules_mod.check_metric_consistency(rule, tolerance)
        status = "PASS" if rep.ok else "FAIL"
        click.echo(f"[{status}] row {i}: supp={rule.support} conf={rule.confidence} "
                   f"lift={rule.lift}  {rule}")
        if not rep.ok:
            failures += 1
            for reason in rep.failures:
                click.echo(f"       {reason}")
    total = len(ruleset.rules)
    click.echo(f"{total - failures}/{total} rows pass" if total else "0 rows")
    sys.exit(1 if failures else 0)


@main.group("synth")
def synth_group():
    """Synthetic scenario generation and attack injection."""


def _parse_attack(text, dataset):
    parts = text.split(":")
    if len(parts) != 4:
        _die(f"--attack expects ATTRIBUTE:START:END:VALUE, got {text!r}")
    attr, start, end, value = parts
    kinds = {a.name: a.kind for a in dataset.schema}
    if attr not in kinds:
        _die(f"attack targets unknown attribute {attr!r}")
    kind = kinds[attr]
    if kind == "continuous":
        override = float(value)
    elif kind == "boolean":
        override = value == "True"
    else:
        override = value
    try:
        return synth_mod.AttackSpec(attr, (int(start), int(end)), override)
    except ValueError:
        _die(f"--attack has non-integer interval: {text!r}")


@synth_group.command("generate")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="scenario.csv", show_default=True)
@click.option("--attack", "attacks", multiple=True,
              help="Inject ATTRIBUTE:START:END:VALUE (repeatable).")
@click.option("--labels-out", type=click.Path(dir_okay=False),
              help="Write attacked (row,attribute) ground-truth labels as CSV.")
def cmd_synth_generate(config_path, output, attacks, labels_out):
    """Generate a scenario CSV from a YAML config, optionally with attacks."""
    config = _guard(synth_mod.load_scenario, config_path)
    dataset = _guard(synth_mod.generate_normal, config)
    labels = []
    if attacks:
        specs = [_parse_attack(a, dataset) for a in attacks]
        dataset, labels = _guard(synth_mod.inject_attack, dataset, specs)
    ingest.write_dataset(dataset, output)
    click.echo(f"wrote {len(dataset)} records x {len(dataset.schema)} attributes to {output}")
    if attacks:
        click.echo(f"attacked cells: {len(labels)}")
    if labels_out:
        lines = ["row,attribute"] + [f"{r},{a}" for r, a in labels]
        Path(labels_out).write_text("\n".join(lines) + "\n", encoding="utf-8")


@synth_group.command("demo-config")
@click.option("-o", "--output", default="scenario.yaml", show_default=True)
@click.option("--planted", default=10, show_default=True,
              help="Number of planted coupling rules.")
@click.option("--extra", default=0, show_default=True,
              help="Uncorrelated varying attributes.")
@click.option("--constants", default=0, show_default=True,
              help="Constant attributes (exercise pruning).")
@click.option("--duration", default=512, show_default=True)
@click.option("--seed", default=7, show_default=True)
def cmd_synth_demo(output, planted, extra, constants, duration, seed):
    """Emit a ready-to-run scenario config with known-answer couplings."""
    config = _guard(synth_mod.planted_scenario, planted, duration, seed, extra, constants)
    synth_mod.save_scenario(config, output)
    click.echo(f"wrote scenario config with {planted} planted rules to {output}")


if __name__ == "__main__":
    main()

"""Synthetic grid-shaped telemetry: normal scenarios plus attack injection.

Scenarios are generated at 1 sample/second from a seeded RNG. Coupling
rules (expressed in the same ``attribute=state`` vocabulary the miner
emits) are enforced in every record, so mining a generated scenario must
recover each coupling as a confidence-1.0 rule — a known-answer test for
the whole pipeline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, asdict
from pathlib import Path

import yaml

from .discretize import Item, STATUS_ENCODE, STATUS_MAP
from .errors import SynthError
from .ingest import AttributeSchema, RawDataset, RawRecord

DRIVERS = ("constant", "in-band", "toggle")
KIND_STATES = {
    "continuous": ("0", "1"),
    "status-code": ("OPEN", "CLOSE", "FAULT"),
    "boolean": ("True", "False"),
}


@dataclass(frozen=True)
class SignalConfig:
    """One generated attribute and the process driving its state over time."""

    name: str
    kind: str  # continuous | status-code | boolean
    driver: str = "toggle"  # constant | in-band | toggle
    nominal: float = 240.0  # continuous only: center of the healthy band
    noise_fraction: float = 0.02  # continuous only: in-band jitter amplitude
    states: tuple = ()  # toggle cycle; defaults per kind
    dwell: tuple = (5, 20)  # toggle dwell-time range, seconds
    state: str = ""  # constant driver state

    def __post_init__(self):
        if self.kind not in KIND_STATES:
            raise SynthError(f"{self.name}: unknown signal kind {self.kind!r}")
        if self.driver not in DRIVERS:
            raise SynthError(f"{self.name}: unknown driver {self.driver!r}")
        if self.driver == "in-band" and self.kind != "continuous":
            raise SynthError(f"{self.name}: in-band driver requires a continuous signal")
        alphabet = set(KIND_STATES[self.kind])
        for s in self.states:
            if s not in alphabet:
                raise SynthError(f"{self.name}: state {s!r} invalid for kind {self.kind}")
        if self.driver == "constant" and self.state not in alphabet:
            raise SynthError(f"{self.name}: constant state {self.state!r} invalid")
        if not (1 <= self.dwell[0] <= self.dwell[1]):
            raise SynthError(f"{self.name}: bad dwell range {self.dwell}")

    def cycle_states(self):
        if self.states:
            return self.states
        if self.kind == "continuous":
            return ("1", "0")
        if self.kind == "status-code":
            return ("CLOSE", "OPEN")
        return ("True", "False")


@dataclass(frozen=True)
class CouplingRule:
    """Deterministic dependency: whenever all `when` items hold, force `then`."""

    when: tuple
    then: tuple


@dataclass
class GridScenarioConfig:
    duration_s: int
    seed: int
    attributes: list
    coupling_rules: list = field(default_factory=list)
    label: str = "synthetic"

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SynthError("duplicate attribute names in scenario config")
        by_name = {a.name: a for a in self.attributes}
        forced_by = {}
        for rule in self.coupling_rules:
            for item in rule.when + rule.then:
                sig = by_name.get(item.attribute)
                if sig is None:
                    raise SynthError(f"coupling references unknown attribute {item.attribute!r}")
                if item.state not in KIND_STATES[sig.kind]:
                    raise SynthError(
                        f"coupling state {item.state!r} invalid for {item.attribute!r}"
                    )
            for item in rule.then:
                prior = forced_by.get((item.attribute, frozenset(rule.when)))
                if prior is not None and prior != item.state:
                    raise SynthError(
                        f"contradictory coupling rules: {item.attribute!r} forced to "
                        f"both {prior!r} and {item.state!r} under the same condition"
                    )
                forced_by[(item.attribute, frozenset(rule.when))] = item.state


@dataclass(frozen=True)
class AttackSpec:
    """Override one attribute's raw value on a closed timestamp interval."""

    target_attribute: str
    interval: tuple  # (start_s, end_s), inclusive
    override: object  # raw scalar in the column's on-disk type

    def __post_init__(self):
        if self.interval[0] > self.interval[1]:
            raise SynthError(f"attack interval reversed: {self.interval}")


def _toggle_sequence(rng, states, dwell, n):
    seq = []
    i = 0
    while len(seq) < n:
        seq.extend([states[i % len(states)]] * rng.randint(dwell[0], dwell[1]))
        i += 1
    return seq[:n]


def _apply_couplings(states, coupling_rules):
    """Enforce couplings to a fixpoint; conflicting forces are an error."""
    forced = {}
    for _ in range(len(coupling_rules) + 1):
        changed = False
        for rule in coupling_rules:
            if all(states.get(i.attribute) == i.state for i in rule.when):
                for item in rule.then:
                    prior = forced.get(item.attribute)
                    if prior is not None and prior != item.state:
                        raise SynthError(
                            f"contradictory coupling rules at runtime: {item.attribute!r} "
                            f"forced to both {prior!r} and {item.state!r}"
                        )
                    forced[item.attribute] = item.state
                    if states[item.attribute] != item.state:
                        states[item.attribute] = item.state
                        changed = True
        if not changed:
            break
    return states


def _realize(rng, sig, state):
    if sig.kind == "continuous":
        if state == "1":
            return sig.nominal * (1 + rng.uniform(-sig.noise_fraction, sig.noise_fraction))
        return 0.0
    if sig.kind == "status-code":
        return STATUS_ENCODE[state]
    return state == "True"


def generate_normal(config):
    """Generate a clean scenario; deterministic given the seed."""
    rng = random.Random(config.seed)
    n = config.duration_s

    sequences = {}
    for sig in config.attributes:
        if sig.driver == "constant":
            sequences[sig.name] = [sig.state] * n
        elif sig.driver == "in-band":
            sequences[sig.name] = ["1"] * n
        else:
            sequences[sig.name] = _toggle_sequence(rng, sig.cycle_states(), sig.dwell, n)

    schema = [AttributeSchema(sig.name, sig.kind) for sig in config.attributes]
    records = []
    for t in range(n):
        states = {sig.name: sequences[sig.name][t] for sig in config.attributes}
        states = _apply_couplings(states, config.coupling_rules)
        values = {sig.name: _realize(rng, sig, states[sig.name]) for sig in config.attributes}
        records.append(RawRecord(t, values))
    meta = {"label": config.label, "start": 0, "end": max(n - 1, 0)}
    return RawDataset(schema=schema, records=records, scenario_meta=meta)


def inject_attack(dataset, attacks):
    """Apply overrides; returns (attacked dataset, labels of changed cells).

    Labels are (row_index, attribute_name) pairs for every cell whose stored
    value actually changed.
    """
    names = set(dataset.attribute_names())
    by_attr = {}
    for atk in attacks:
        if atk.target_attribute not in names:
            raise SynthError(f"attack targets unknown attribute {atk.target_attribute!r}")
        for other in by_attr.get(atk.target_attribute, ()):
            lo = max(atk.interval[0], other.interval[0])
            hi = min(atk.interval[1], other.interval[1])
            if lo <= hi:
                raise SynthError(
                    f"overlapping attacks on {atk.target_attribute!r}: "
                    f"{other.interval} and {atk.interval}"
                )
        by_attr.setdefault(atk.target_attribute, []).append(atk)

    labels = []
    records = []
    for row, rec in enumerate(dataset.records):
        values = dict(rec.values)
        for atk in attacks:
            if atk.interval[0] <= rec.timestamp <= atk.interval[1]:
                if values[atk.target_attribute] != atk.override:
                    values[atk.target_attribute] = atk.override
                    labels.append((row, atk.target_attribute))
        records.append(RawRecord(rec.timestamp, values))
    attacked = RawDataset(
        schema=list(dataset.schema),
        records=records,
        scenario_meta=dict(dataset.scenario_meta or {}),
    )
    return attacked, labels


# ---------------------------------------------------------------------------
# Ready-made scenario builders

def planted_scenario(n_planted=10, duration_s=512, seed=7, extra_attributes=0,
                     n_constants=0):
    """Scenario whose coupling rules are known mined-rule answers.

    Each planted pair is a breaker that dwells mostly CLOSE driving a
    downstream continuous signal into its band; the expected mined rule is
    ``<breaker>=CLOSE => <signal>=1``. Extra attributes are uncorrelated
    toggles; constants exercise pruning.
    """
    attributes = []
    couplings = []
    for i in range(n_planted):
        breaker = f"Synth.Stage{i}.BREAKER.STATUS"
        current = f"Synth.Stage{i}.FEEDER.Current"
        # three CLOSE dwells per OPEN dwell keeps CLOSE well above the 60%
        # support floor while still varying enough to survive pruning
        attributes.append(
            SignalConfig(breaker, "status-code", driver="toggle",
                         states=("CLOSE", "CLOSE", "CLOSE", "OPEN"), dwell=(4, 8))
        )
        attributes.append(
            SignalConfig(current, "continuous", driver="toggle", nominal=240.0,
                         states=("0", "1"), dwell=(3, 6))
        )
        couplings.append(
            CouplingRule(when=(Item(breaker, "CLOSE"),), then=(Item(current, "1"),))
        )
    for i in range(extra_attributes):
        attributes.append(
            SignalConfig(f"Synth.Aux{i}.FLAG", "boolean", driver="toggle",
                         states=("True", "False"), dwell=(4, 12))
        )
    for i in range(n_constants):
        attributes.append(
            SignalConfig(f"Synth.Const{i}.Setpoint", "continuous", driver="in-band",
                         nominal=420.0)
        )
    return GridScenarioConfig(
        duration_s=duration_s,
        seed=seed,
        attributes=attributes,
        coupling_rules=couplings,
        label=f"planted-{n_planted}",
    )


def epic_like_scenario(duration_s=512, n_attributes=292, n_varying=64, seed=19):
    """A scenario with EPIC-scale shape: mostly constant columns, a varying core."""
    if n_varying > n_attributes:
        raise SynthError("n_varying cannot exceed n_attributes")
    attributes = []
    for i in range(n_varying):
        kind = ("status-code", "boolean", "continuous")[i % 3]
        if kind == "continuous":
            attributes.append(
                SignalConfig(f"Grid.Var{i}.Measurement", kind, driver="toggle",
                             nominal=240.0, states=("1", "0"), dwell=(5, 25))
            )
        elif kind == "boolean":
            attributes.append(
                SignalConfig(f"Grid.Var{i}.MODE_CLOSE", kind, driver="toggle",
                             dwell=(5, 25))
            )
        else:
            attributes.append(
                SignalConfig(f"Grid.Var{i}.STATUS", kind, driver="toggle",
                             states=("CLOSE", "OPEN"), dwell=(5, 25))
            )
    for i in range(n_attributes - n_varying):
        kind = ("continuous", "boolean", "status-code")[i % 3]
        if kind == "continuous":
            attributes.append(
                SignalConfig(f"Grid.Const{i}.Setpoint", kind, driver="in-band", nominal=420.0)
            )
        elif kind == "boolean":
            attributes.append(
                SignalConfig(f"Grid.Const{i}.ENABLED", kind, driver="constant", state="True")
            )
        else:
            attributes.append(
                SignalConfig(f"Grid.Const{i}.STATUS", kind, driver="constant", state="CLOSE")
            )
    return GridScenarioConfig(
        duration_s=duration_s, seed=seed, attributes=attributes, label="epic-like"
    )


# ---------------------------------------------------------------------------
# Scenario config files (YAML)

def scenario_to_yaml(config):
    doc = {
        "duration_s": config.duration_s,
        "seed": config.seed,
        "label": config.label,
        "attributes": [
            {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(a).items()}
            for a in config.attributes
        ],
        "coupling_rules": [
            {"when": [str(i) for i in r.when], "then": [str(i) for i in r.then]}
            for r in config.coupling_rules
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def scenario_from_yaml(text):
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise SynthError("scenario config must be a YAML mapping")
    try:
        attributes = [
            SignalConfig(
                name=a["name"],
                kind=a["kind"],
                driver=a.get("driver", "toggle"),
                nominal=float(a.get("nominal", 240.0)),
                noise_fraction=float(a.get("noise_fraction", 0.02)),
                states=tuple(str(s) for s in a.get("states", ())),
                dwell=tuple(a.get("dwell", (5, 20))),
                state=str(a.get("state", "")),
            )
            for a in doc["attributes"]
        ]
        couplings = [
            CouplingRule(
                when=tuple(Item.parse(t) for t in r["when"]),
                then=tuple(Item.parse(t) for t in r["then"]),
            )
            for r in doc.get("coupling_rules", [])
        ]
        return GridScenarioConfig(
            duration_s=int(doc["duration_s"]),
            seed=int(doc["seed"]),
            attributes=attributes,
            coupling_rules=couplings,
            label=str(doc.get("label", "synthetic")),
        )
    except KeyError as exc:
        raise SynthError(f"scenario config missing field: {exc}") from None


def load_scenario(path):
    return scenario_from_yaml(Path(path).read_text(encoding="utf-8"))


def save_scenario(config, path):
    Path(path).write_text(scenario_to_yaml(config), encoding="utf-8")

"""Model documents: the on-disk schema, validation, and compilation.

A model file is YAML with one quirk: the YAML 1.1 implicit booleans are
disabled, so ``yes``/``no``/``on``/``off`` parse as plain strings.  Outcome
labels like ``yes`` are everywhere in these models, and silently turning them
into ``True`` is exactly the kind of bug this loader exists to prevent.
Numbers and null keep their usual behavior.  See docs/format.md for the
grammar.

:func:`parse_model` validates everything it can and reports all problems at
once, each prefixed with a field path like ``rules[3].masses[1].mass``.
:func:`compile_network` turns a validated document into the credal-level
network (conditional rules ballooned into joint relations, document order
preserved) plus the pignistic-level decision model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

import yaml

from .decision import DecisionModel
from .errors import DomainSizeError, ModelError
from .frames import ConfigurationSet, Domain, Variable
from .mass import MASS_TOL, ConditionalBelief, MassFunction, balloon, simple_support
from .propagation import ValuationNetwork
from .planner import NO_TEST

DEFAULT_TEST_FRAME = ("+", "-")
DEFAULT_SYMPTOM_FRAME = ("yes", "no")

_SECTIONS = ("tests", "symptoms", "diagnosis", "treatments", "utility", "rules", "prior")
_RULE_KINDS = ("joint", "simple_support", "conditional")


class _ModelLoader(yaml.SafeLoader):
    """SafeLoader minus implicit booleans, plus duplicate-key detection."""

    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=True)
            if key in seen:
                raise yaml.constructor.ConstructorError(
                    None, None, f"duplicate mapping key {key!r}", key_node.start_mark
                )
            seen.add(key)
        return super().construct_mapping(node, deep)


_ModelLoader.yaml_implicit_resolvers = {
    prefix: [(tag, regexp) for tag, regexp in entries if tag != "tag:yaml.org,2002:bool"]
    for prefix, entries in yaml.SafeLoader.yaml_implicit_resolvers.items()
}


# ---------------------------------------------------------------------------
# document types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestDecl:
    id: str
    cost: float
    frame: tuple[str, ...] = DEFAULT_TEST_FRAME


@dataclass(frozen=True)
class SymptomDecl:
    id: str
    frame: tuple[str, ...] = DEFAULT_SYMPTOM_FRAME


@dataclass(frozen=True)
class DiagnosisDecl:
    id: str
    frame: tuple[str, ...]


@dataclass(frozen=True)
class FocalSpec:
    """One focal set (as configurations over the rule's declared domain order)
    and its mass."""

    configs: tuple[tuple[str, ...], ...]
    mass: float


@dataclass(frozen=True)
class BeliefRule:
    """One belief relation, as declared.

    ``domain`` is the rule's variable ids in declared order; configurations
    inside :class:`FocalSpec` align with that order.  ``condition_*`` are set
    only for conditionals, ``support``/``weight`` only for simple support.
    """

    id: str
    kind: str
    domain: tuple[str, ...]
    masses: tuple[FocalSpec, ...] = ()
    condition_variable: str | None = None
    condition_value: str | None = None
    support: tuple[tuple[str, ...], ...] = ()
    weight: float | None = None


@dataclass(frozen=True)
class ModelDocument:
    tests: tuple[TestDecl, ...]
    symptoms: tuple[SymptomDecl, ...]
    diagnosis: DiagnosisDecl
    treatments: tuple[str, ...]
    utility: dict[str, dict[str, float]]
    rules: tuple[BeliefRule, ...] = ()
    prior: tuple[FocalSpec, ...] | None = None

    def variable_declarations(self) -> list:
        return [*self.tests, *self.symptoms, self.diagnosis]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

class _Diagnostics:
    def __init__(self):
        self.messages: list[str] = []

    def error(self, path: str, message: str) -> None:
        self.messages.append(f"{path}: {message}")

    def raise_if_any(self) -> None:
        if self.messages:
            raise ModelError(self.messages)


def _as_str(diag: _Diagnostics, path: str, value: Any) -> str | None:
    if isinstance(value, str) and value:
        return value
    diag.error(path, f"expected a non-empty string, got {value!r}")
    return None


def _as_number(diag: _Diagnostics, path: str, value: Any) -> float | None:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    diag.error(path, f"expected a number, got {value!r}")
    return None


def _as_frame(diag: _Diagnostics, path: str, value: Any) -> tuple[str, ...] | None:
    if not isinstance(value, list) or not value:
        diag.error(path, f"expected a non-empty list of labels, got {value!r}")
        return None
    labels = []
    for i, item in enumerate(value):
        if not isinstance(item, str) or not item:
            diag.error(f"{path}[{i}]", f"labels must be non-empty strings, got {item!r}")
            return None
        labels.append(item)
    if len(set(labels)) != len(labels):
        diag.error(path, f"duplicate labels in {labels}")
        return None
    if len(labels) < 2:
        diag.error(path, "a frame needs at least two outcomes")
        return None
    return tuple(labels)


def _check_keys(diag: _Diagnostics, path: str, mapping: dict, allowed: Iterable[str]) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        diag.error(path, f"unknown fields {unknown} (allowed: {sorted(allowed)})")


def _parse_configs(
    diag: _Diagnostics,
    path: str,
    value: Any,
    domain_ids: tuple[str, ...],
    frames: dict[str, tuple[str, ...]],
) -> tuple[tuple[str, ...], ...] | None:
    """A focal set: a list of configurations over ``domain_ids``.

    Each configuration may be a bare label (single-variable domains only), a
    list of labels in domain order, or a mapping variable→label.
    """
    if not isinstance(value, list) or not value:
        diag.error(path, f"expected a non-empty list of configurations, got {value!r}")
        return None
    configs: list[tuple[str, ...]] = []
    ok = True
    for i, entry in enumerate(value):
        epath = f"{path}[{i}]"
        if isinstance(entry, str):
            if len(domain_ids) != 1:
                diag.error(epath, "bare labels are only allowed for single-variable domains")
                ok = False
                continue
            labels = (entry,)
        elif isinstance(entry, list):
            if len(entry) != len(domain_ids) or not all(isinstance(l, str) for l in entry):
                diag.error(
                    epath,
                    f"expected {len(domain_ids)} labels (order {list(domain_ids)}), got {entry!r}",
                )
                ok = False
                continue
            labels = tuple(entry)
        elif isinstance(entry, dict):
            if set(entry) != set(domain_ids):
                diag.error(epath, f"configuration must name exactly {list(domain_ids)}")
                ok = False
                continue
            labels = tuple(entry[v] for v in domain_ids)
            if not all(isinstance(l, str) for l in labels):
                diag.error(epath, "labels must be strings")
                ok = False
                continue
        else:
            diag.error(epath, f"unsupported configuration {entry!r}")
            ok = False
            continue
        for var_id, label in zip(domain_ids, labels):
            if label not in frames[var_id]:
                diag.error(epath, f"label {label!r} not in frame of {var_id!r} {list(frames[var_id])}")
                ok = False
        configs.append(labels)
    if len(set(configs)) != len(configs):
        diag.error(path, "duplicate configurations in one focal set")
        ok = False
    return tuple(configs) if ok else None


def _parse_masses(
    diag: _Diagnostics,
    path: str,
    value: Any,
    domain_ids: tuple[str, ...],
    frames: dict[str, tuple[str, ...]],
) -> tuple[FocalSpec, ...] | None:
    if not isinstance(value, list) or not value:
        diag.error(path, f"expected a non-empty list of {{set, mass}} entries, got {value!r}")
        return None
    specs = []
    ok = True
    total = 0.0
    for i, entry in enumerate(value):
        epath = f"{path}[{i}]"
        if not isinstance(entry, dict):
            diag.error(epath, f"expected a mapping with 'set' and 'mass', got {entry!r}")
            ok = False
            continue
        _check_keys(diag, epath, entry, ("set", "mass"))
        if "set" not in entry or "mass" not in entry:
            diag.error(epath, "both 'set' and 'mass' are required")
            ok = False
            continue
        configs = _parse_configs(diag, f"{epath}.set", entry["set"], domain_ids, frames)
        mass = _as_number(diag, f"{epath}.mass", entry["mass"])
        if mass is not None and not 0 < mass <= 1:
            diag.error(f"{epath}.mass", f"mass must be in (0, 1], got {mass}")
            mass = None
        if configs is None or mass is None:
            ok = False
            continue
        total += mass
        specs.append(FocalSpec(configs, mass))
    if ok and abs(total - 1.0) > MASS_TOL:
        diag.error(path, f"masses sum to {total!r}, expected 1")
        ok = False
    return tuple(specs) if ok else None


def _parse_rule(
    diag: _Diagnostics,
    path: str,
    raw: Any,
    index: int,
    frames: dict[str, tuple[str, ...]],
) -> BeliefRule | None:
    if not isinstance(raw, dict):
        diag.error(path, f"expected a mapping, got {raw!r}")
        return None
    kind = raw.get("kind")
    if kind not in _RULE_KINDS:
        diag.error(f"{path}.kind", f"expected one of {list(_RULE_KINDS)}, got {kind!r}")
        return None
    rule_id = raw.get("id", f"rule-{index}")
    if not isinstance(rule_id, str) or not rule_id:
        diag.error(f"{path}.id", f"expected a non-empty string, got {rule_id!r}")
        return None

    def domain_of(key: str) -> tuple[str, ...] | None:
        value = raw.get(key)
        if not isinstance(value, list) or not value:
            diag.error(f"{path}.{key}", f"expected a non-empty list of variable ids, got {value!r}")
            return None
        ids = []
        for i, v in enumerate(value):
            if not isinstance(v, str) or v not in frames:
                diag.error(f"{path}.{key}[{i}]", f"unknown variable {v!r}")
                return None
            ids.append(v)
        if len(set(ids)) != len(ids):
            diag.error(f"{path}.{key}", f"duplicate variables in {ids}")
            return None
        return tuple(ids)

    if kind == "joint":
        _check_keys(diag, path, raw, ("kind", "id", "domain", "masses"))
        domain = domain_of("domain")
        if domain is None:
            return None
        masses = _parse_masses(diag, f"{path}.masses", raw.get("masses"), domain, frames)
        if masses is None:
            return None
        return BeliefRule(id=rule_id, kind=kind, domain=domain, masses=masses)

    if kind == "simple_support":
        _check_keys(diag, path, raw, ("kind", "id", "domain", "support", "weight"))
        domain = domain_of("domain")
        if domain is None:
            return None
        support = _parse_configs(diag, f"{path}.support", raw.get("support"), domain, frames)
        weight = _as_number(diag, f"{path}.weight", raw.get("weight"))
        if weight is not None and not 0 < weight <= 1:
            diag.error(f"{path}.weight", f"weight must be in (0, 1], got {weight}")
            weight = None
        if support is None or weight is None:
            return None
        return BeliefRule(id=rule_id, kind=kind, domain=domain, support=support, weight=weight)

    # conditional
    _check_keys(diag, path, raw, ("kind", "id", "condition", "target", "masses"))
    condition = raw.get("condition")
    if not isinstance(condition, dict) or set(condition) != {"variable", "value"}:
        diag.error(f"{path}.condition", "expected a mapping with 'variable' and 'value'")
        return None
    cvar, cval = condition["variable"], condition["value"]
    if not isinstance(cvar, str) or cvar not in frames:
        diag.error(f"{path}.condition.variable", f"unknown variable {cvar!r}")
        return None
    if not isinstance(cval, str) or cval not in frames[cvar]:
        diag.error(
            f"{path}.condition.value",
            f"label {cval!r} not in frame of {cvar!r} {list(frames[cvar])}",
        )
        return None
    target = domain_of("target")
    if target is None:
        return None
    if cvar in target:
        diag.error(f"{path}.target", f"condition variable {cvar!r} cannot appear in the target")
        return None
    masses = _parse_masses(diag, f"{path}.masses", raw.get("masses"), target, frames)
    if masses is None:
        return None
    return BeliefRule(
        id=rule_id,
        kind=kind,
        domain=target,
        masses=masses,
        condition_variable=cvar,
        condition_value=cval,
    )


def parse_model(text: str) -> ModelDocument:
    """Parse and validate a model document; all problems reported together."""
    try:
        raw = yaml.load(text, Loader=_ModelLoader)
    except yaml.YAMLError as exc:
        raise ModelError([f"document: not valid YAML: {exc}"]) from exc
    diag = _Diagnostics()
    if not isinstance(raw, dict):
        raise ModelError(["document: top level must be a mapping of sections"])
    _check_keys(diag, "document", raw, _SECTIONS)

    # -- variable sections --------------------------------------------------
    tests: list[TestDecl] = []
    for i, entry in enumerate(raw.get("tests", []) or []):
        path = f"tests[{i}]"
        if not isinstance(entry, dict):
            diag.error(path, f"expected a mapping, got {entry!r}")
            continue
        _check_keys(diag, path, entry, ("id", "cost", "frame"))
        test_id = _as_str(diag, f"{path}.id", entry.get("id"))
        if test_id == NO_TEST:
            diag.error(f"{path}.id", f"{NO_TEST!r} is reserved for the no-test candidate")
            test_id = None
        if "cost" not in entry:
            diag.error(f"{path}.cost", "cost is required")
            cost = None
        else:
            cost = _as_number(diag, f"{path}.cost", entry.get("cost"))
            if cost is not None and cost < 0:
                diag.error(f"{path}.cost", f"cost must be nonnegative, got {cost}")
                cost = None
        frame = (
            _as_frame(diag, f"{path}.frame", entry["frame"])
            if "frame" in entry
            else DEFAULT_TEST_FRAME
        )
        if test_id is not None and cost is not None and frame is not None:
            tests.append(TestDecl(test_id, cost, frame))

    symptoms: list[SymptomDecl] = []
    for i, entry in enumerate(raw.get("symptoms", []) or []):
        path = f"symptoms[{i}]"
        if not isinstance(entry, dict):
            diag.error(path, f"expected a mapping, got {entry!r}")
            continue
        _check_keys(diag, path, entry, ("id", "frame"))
        symptom_id = _as_str(diag, f"{path}.id", entry.get("id"))
        frame = (
            _as_frame(diag, f"{path}.frame", entry["frame"])
            if "frame" in entry
            else DEFAULT_SYMPTOM_FRAME
        )
        if symptom_id is not None and frame is not None:
            symptoms.append(SymptomDecl(symptom_id, frame))

    diagnosis = None
    raw_diag = raw.get("diagnosis")
    if raw_diag is None:
        diag.error("diagnosis", "exactly one diagnosis is required")
    elif not isinstance(raw_diag, dict):
        diag.error("diagnosis", "expected a single mapping with 'id' and 'frame'")
    else:
        _check_keys(diag, "diagnosis", raw_diag, ("id", "frame"))
        diag_id = _as_str(diag, "diagnosis.id", raw_diag.get("id"))
        frame = _as_frame(diag, "diagnosis.frame", raw_diag.get("frame"))
        if diag_id is not None and frame is not None:
            diagnosis = DiagnosisDecl(diag_id, frame)

    seen_ids: set[str] = set()
    declared = [*tests, *symptoms] + ([diagnosis] if diagnosis else [])
    for decl in declared:
        if decl.id in seen_ids:
            diag.error("document", f"variable id {decl.id!r} declared more than once")
        seen_ids.add(decl.id)
    frames = {decl.id: decl.frame for decl in declared}

    # -- treatments and utility --------------------------------------------
    treatments: list[str] = []
    raw_treatments = raw.get("treatments")
    if not isinstance(raw_treatments, list) or not raw_treatments:
        diag.error("treatments", f"expected a non-empty list, got {raw_treatments!r}")
    else:
        for i, t in enumerate(raw_treatments):
            label = _as_str(diag, f"treatments[{i}]", t)
            if label is not None:
                treatments.append(label)
        if len(set(treatments)) != len(treatments):
            diag.error("treatments", f"duplicate treatment labels in {treatments}")

    utility: dict[str, dict[str, float]] = {}
    raw_utility = raw.get("utility")
    if not isinstance(raw_utility, dict) or not raw_utility:
        diag.error("utility", f"expected a mapping treatment -> {{diagnosis: payoff}}, got {raw_utility!r}")
    elif treatments and diagnosis is not None:
        for t in treatments:
            if t not in raw_utility:
                diag.error("utility", f"missing row for treatment {t!r}")
        for t, row in raw_utility.items():
            if t not in treatments:
                diag.error(f"utility.{t}", "not a declared treatment")
                continue
            if not isinstance(row, dict):
                diag.error(f"utility.{t}", f"expected a mapping diagnosis -> payoff, got {row!r}")
                continue
            out_row: dict[str, float] = {}
            for d in diagnosis.frame:
                if d not in row:
                    diag.error(f"utility.{t}", f"missing payoff for diagnosis {d!r}")
            for d, u in row.items():
                if d not in diagnosis.frame:
                    diag.error(f"utility.{t}.{d}", "not a diagnosis outcome")
                    continue
                value = _as_number(diag, f"utility.{t}.{d}", u)
                if value is not None:
                    out_row[d] = value
            utility[t] = out_row

    # -- rules and prior ----------------------------------------------------
    rules: list[BeliefRule] = []
    raw_rules = raw.get("rules", []) or []
    if not isinstance(raw_rules, list):
        diag.error("rules", f"expected a list, got {raw_rules!r}")
        raw_rules = []
    if frames:
        rule_ids: set[str] = set()
        for i, entry in enumerate(raw_rules):
            rule = _parse_rule(diag, f"rules[{i}]", entry, i, frames)
            if rule is not None:
                if rule.id in rule_ids:
                    diag.error(f"rules[{i}].id", f"duplicate rule id {rule.id!r}")
                rule_ids.add(rule.id)
                rules.append(rule)

    prior = None
    raw_prior = raw.get("prior")
    if raw_prior is not None and diagnosis is not None:
        if not isinstance(raw_prior, dict) or set(raw_prior) != {"masses"}:
            diag.error("prior", "expected a mapping with a single 'masses' list")
        else:
            prior = _parse_masses(
                diag, "prior.masses", raw_prior["masses"], (diagnosis.id,), frames
            )

    diag.raise_if_any()
    return ModelDocument(
        tests=tuple(tests),
        symptoms=tuple(symptoms),
        diagnosis=diagnosis,
        treatments=tuple(treatments),
        utility=utility,
        rules=tuple(rules),
        prior=prior,
    )


# ---------------------------------------------------------------------------
# serialization (inverse of parse_model on valid documents)
# ---------------------------------------------------------------------------

def _config_entry(domain: tuple[str, ...], config: tuple[str, ...]):
    return config[0] if len(domain) == 1 else list(config)


def _masses_entry(domain: tuple[str, ...], specs: tuple[FocalSpec, ...]):
    return [
        {"set": [_config_entry(domain, c) for c in spec.configs], "mass": spec.mass}
        for spec in specs
    ]


def serialize_model(doc: ModelDocument) -> str:
    data: dict[str, Any] = {
        "tests": [
            {"id": t.id, "cost": t.cost, "frame": list(t.frame)} for t in doc.tests
        ],
        "symptoms": [{"id": s.id, "frame": list(s.frame)} for s in doc.symptoms],
        "diagnosis": {"id": doc.diagnosis.id, "frame": list(doc.diagnosis.frame)},
        "treatments": list(doc.treatments),
        "utility": {t: dict(doc.utility[t]) for t in doc.treatments},
    }
    rules = []
    for rule in doc.rules:
        entry: dict[str, Any] = {"kind": rule.kind, "id": rule.id}
        if rule.kind == "conditional":
            entry["condition"] = {
                "variable": rule.condition_variable,
                "value": rule.condition_value,
            }
            entry["target"] = list(rule.domain)
            entry["masses"] = _masses_entry(rule.domain, rule.masses)
        elif rule.kind == "simple_support":
            entry["domain"] = list(rule.domain)
            entry["support"] = [_config_entry(rule.domain, c) for c in rule.support]
            entry["weight"] = rule.weight
        else:
            entry["domain"] = list(rule.domain)
            entry["masses"] = _masses_entry(rule.domain, rule.masses)
        rules.append(entry)
    if rules:
        data["rules"] = rules
    if doc.prior is not None:
        data["prior"] = {"masses": _masses_entry((doc.diagnosis.id,), doc.prior)}
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def _mass_from_specs(
    domain: Domain, rule_domain: tuple[str, ...], specs: tuple[FocalSpec, ...]
) -> MassFunction:
    masses: dict[int, float] = {}
    for spec in specs:
        bits = 0
        for config in spec.configs:
            bits |= 1 << domain.index_of(dict(zip(rule_domain, config)))
        masses[bits] = masses.get(bits, 0.0) + spec.mass
    return MassFunction(domain, masses)


def compile_network(
    doc: ModelDocument, size_bound: int | None = None
) -> tuple[ValuationNetwork, DecisionModel]:
    """The credal-level network and pignistic-level model of a document.

    Deterministic: relation order is prior first (when present), then rules
    in document order.
    """
    variables = {d.id: Variable(d.id, d.frame) for d in doc.variable_declarations()}
    relations: list[MassFunction] = []
    diagnosis_domain = Domain((variables[doc.diagnosis.id],))
    if doc.prior is not None:
        relations.append(_mass_from_specs(diagnosis_domain, (doc.diagnosis.id,), doc.prior))
    for rule in doc.rules:
        try:
            relations.append(_compile_rule(rule, variables, size_bound))
        except (DomainSizeError, ValueError) as exc:
            raise ModelError([f"rule {rule.id}: {exc}"]) from exc
    network = ValuationNetwork(
        tuple(variables.values()), tuple(relations), size_bound=size_bound
    )
    decision = DecisionModel(
        treatments=doc.treatments,
        diagnoses=doc.diagnosis.frame,
        utility={t: dict(row) for t, row in doc.utility.items()},
        test_costs={t.id: t.cost for t in doc.tests},
        diagnosis_id=doc.diagnosis.id,
    )
    return network, decision


def _compile_rule(
    rule: BeliefRule, variables: dict[str, Variable], size_bound: int | None
) -> MassFunction:
    domain = Domain(tuple(variables[v] for v in rule.domain), size_bound=size_bound)
    if rule.kind == "joint":
        return _mass_from_specs(domain, rule.domain, rule.masses)
    if rule.kind == "simple_support":
        bits = 0
        for config in rule.support:
            bits |= 1 << domain.index_of(dict(zip(rule.domain, config)))
        return simple_support(domain, ConfigurationSet(domain, bits), rule.weight)
    conditional = ConditionalBelief(
        condition_variable=variables[rule.condition_variable],
        condition_value=rule.condition_value,
        conditional=_mass_from_specs(domain, rule.domain, rule.masses),
    )
    return balloon(conditional, size_bound=size_bound)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def load_model(path: str | Path) -> ModelDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError([f"cannot read model file {path}: {exc}"]) from exc
    return parse_model(text)


def bundled_model_path(name: str) -> Path:
    """Path of a model shipped with the package (``minimal``, ``waste_disposal``)."""
    root = resources.files("beliefplan.models")
    candidate = root / f"{name}.yaml"
    if not candidate.is_file():
        available = sorted(p.stem for p in root.iterdir() if p.name.endswith(".yaml"))
        raise ModelError([f"no bundled model {name!r}; available: {available}"])
    return Path(str(candidate))

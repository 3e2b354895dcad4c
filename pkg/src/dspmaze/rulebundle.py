"""Codec for rule-bundle files and the packaged set of 15 evolved rules.

One record per line: rule id, the four continuous parameters (eta, theta,
alpha_h, alpha_o) to four decimals, then the 32 comma-separated discrete
entries in rule-table row order. Lines starting with '#' are comments.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .plasticity import DspRule, N_RULE_ENTRIES

BUNDLE_HEADER = "# rule_id eta theta alpha_h alpha_o deltas[32]"


class RuleBundleError(ValueError):
    """Raised for malformed rule-bundle records."""


def parse_rule_bundle(text: str) -> list[DspRule]:
    rules: list[DspRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 6:
            raise RuleBundleError(
                f"line {lineno}: expected 6 fields (rule_id, 4 parameters, deltas), "
                f"got {len(fields)}"
            )
        rule_id_text = fields[0]
        try:
            rule_id = int(rule_id_text)
        except ValueError:
            raise RuleBundleError(f"line {lineno}: bad rule_id {rule_id_text!r}") from None
        params = {}
        for name, value in zip(("eta", "theta", "alpha_h", "alpha_o"), fields[1:5]):
            try:
                params[name] = float(value)
            except ValueError:
                raise RuleBundleError(
                    f"rule {rule_id}: bad {name} value {value!r}"
                ) from None
        delta_text = fields[5].split(",")
        if len(delta_text) != N_RULE_ENTRIES:
            raise RuleBundleError(
                f"rule {rule_id}: expected {N_RULE_ENTRIES} deltas, got {len(delta_text)}"
            )
        try:
            delta = tuple(int(d) for d in delta_text)
        except ValueError:
            raise RuleBundleError(f"rule {rule_id}: non-integer delta entry") from None
        try:
            rules.append(DspRule(delta=delta, rule_id=rule_id, **params))
        except ValueError as exc:
            raise RuleBundleError(f"rule {rule_id}: {exc}") from None
    return rules


def serialize_rule_bundle(rules: list[DspRule]) -> str:
    lines = [BUNDLE_HEADER]
    for rule in rules:
        deltas = ",".join(str(d) for d in rule.delta)
        lines.append(
            f"{rule.rule_id} {rule.eta:.4f} {rule.theta:.4f} "
            f"{rule.alpha_h:.4f} {rule.alpha_o:.4f} {deltas}"
        )
    return "\n".join(lines) + "\n"


def load_rule_bundle(path: str | Path) -> list[DspRule]:
    return parse_rule_bundle(Path(path).read_text())


def save_rule_bundle(path: str | Path, rules: list[DspRule]) -> None:
    Path(path).write_text(serialize_rule_bundle(rules))


def default_rule_bundle() -> list[DspRule]:
    """The 15 evolved rules shipped with the package, ids 1..15."""
    text = resources.files("dspmaze.data").joinpath("evolved_rules.txt").read_text()
    return parse_rule_bundle(text)


def rule_by_id(rules: list[DspRule], rule_id: int) -> DspRule:
    for rule in rules:
        if rule.rule_id == rule_id:
            return rule
    raise KeyError(f"no rule with id {rule_id} in bundle")

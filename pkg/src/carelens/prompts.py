"""Prompt bundle assembly: tone directive, qualitative facts, attachments.

Numeric model outputs are quantized into qualitative bands for the bundle's
stated facts; raw values ride along only when the user explicitly asks for
them. Assembly is a pure function of its inputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .affect import TONE_EMPATHETIC, TONE_NEUTRAL, TONE_UPLIFTING, AffectState
from .errors import OutOfRange
from .shapley import ShapAttribution

logger = logging.getLogger(__name__)

HISTORY_WINDOW = 20
ATTACHMENT_CAP = 4

HIGH_PROBABILITY_FLOOR = 0.7
MEDIUM_PROBABILITY_FLOOR = 0.4

DEFAULT_PRECISE_PATTERNS = (
    "exact",
    "precise",
    "numeric value",
    "numerical value",
    "actual number",
    "actual value",
    "raw value",
    "specific number",
)

TONE_DIRECTIVES = {
    TONE_EMPATHETIC: (
        "Respond with empathy and support. Avoid overly complex terminology "
        "while keeping a respectful and professional tone."
    ),
    TONE_UPLIFTING: (
        "Respond in an uplifting and affirmative tone, delivered with "
        "sincerity and professionalism."
    ),
    TONE_NEUTRAL: (
        "Respond in a professional and clear tone, prioritizing clarity and "
        "ease of use."
    ),
}

IMPORTANCE_PHRASES = {
    "top": "plays a more important role in the model decision",
    "middle": "has a moderate influence on the model decision",
    "bottom": "has little influence on the model decision",
}


@dataclass
class Attachment:
    caption: str
    img64: str


@dataclass
class PromptBundle:
    tone: str
    system_directive: str
    history: list[tuple[str, str]]  # (role, content)
    user_message: str
    attachments: list[Attachment] = field(default_factory=list)
    qualitative_facts: list[str] = field(default_factory=list)
    precise_facts: Optional[list[tuple[str, float]]] = None

    def to_request_payload(self, model: str) -> dict:
        """Serialize to the gateway's chat-completion JSON shape."""
        messages = [
            {"role": "system", "content": [{"type": "text", "data": self.system_directive}]}
        ]
        for role, content in self.history:
            messages.append({"role": role, "content": [{"type": "text", "data": content}]})
        content: list[dict] = []
        if self.qualitative_facts:
            content.append(
                {"type": "text", "data": "Model findings:\n" + "\n".join(self.qualitative_facts)}
            )
        if self.precise_facts is not None:
            lines = [f"{name} = {value!r}" for name, value in self.precise_facts]
            content.append({"type": "text", "data": "Precise values:\n" + "\n".join(lines)})
        for att in self.attachments:
            content.append({"type": "image", "caption": att.caption, "data": att.img64})
        content.append({"type": "text", "data": self.user_message})
        messages.append({"role": "user", "content": content})
        return {"model": model, "messages": messages}


def quantize_importance(attr: ShapAttribution) -> list[str]:
    """One qualitative statement per feature, banded by |contribution| rank.

    Band boundaries are ceil splits of the rank order (top third, middle
    third, rest); ties in magnitude resolve by feature name.
    """
    ranked = attr.ranked()
    if not ranked:
        raise ValueError("attribution carries no features")
    n = len(ranked)
    top_cut = math.ceil(n / 3)
    middle_cut = math.ceil(2 * n / 3)
    statements = []
    for rank, (name, _) in enumerate(ranked):
        if rank < top_cut:
            band = "top"
        elif rank < middle_cut:
            band = "middle"
        else:
            band = "bottom"
        statements.append(f"{name} {IMPORTANCE_PHRASES[band]}")
    return statements


def quantize_probability(p: float) -> str:
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"probability {p} outside [0, 1]")
    if p >= HIGH_PROBABILITY_FLOOR:
        return "high probability"
    if p >= MEDIUM_PROBABILITY_FLOOR:
        return "medium"
    return "low"


def tone_directive(state: AffectState) -> str:
    return TONE_DIRECTIVES[state.tone]


def detect_precise_request(
    text: str, patterns: Sequence[str] = DEFAULT_PRECISE_PATTERNS
) -> bool:
    lowered = text.lower()
    hit = any(p in lowered for p in patterns)
    logger.debug("precise-value request=%s patterns=%s text=%r", hit, list(patterns), text)
    return hit


def _facts_for_artifact(artifact) -> list[str]:
    from .causal import CausalGraph
    from .counterfactual import Counterfactual

    if isinstance(artifact, ShapAttribution):
        facts = quantize_importance(artifact)
        band = quantize_probability(min(max(artifact.output, 0.0), 1.0))
        facts.append(f"the model rates the chance of intoxication for this window as: {band}")
        return facts
    if isinstance(artifact, Counterfactual):
        changed = sorted(artifact.changed_features)
        if changed:
            return [
                "changing " + ", ".join(changed) + " would change the model's decision"
            ]
        return ["the window already satisfies the requested outcome"]
    if isinstance(artifact, CausalGraph):
        return [
            f"the causal graph links {u} to {v}" for u, v, _ in artifact.edges
        ] or ["the causal graph found no reliable links between features"]
    if isinstance(artifact, (list, tuple)):
        names = sorted({feat for r in artifact for feat, _, _ in r.conjuncts})
        if names:
            return [
                "the model's behavior is summarized by high-precision rules involving "
                + ", ".join(names)
            ]
        return ["no decision rule met the precision and recall floors"]
    return []


def _precise_for_artifact(artifact) -> list[tuple[str, float]]:
    from .causal import CausalGraph
    from .counterfactual import Counterfactual

    if isinstance(artifact, ShapAttribution):
        values = [("base_value", artifact.base_value), ("model_output", artifact.output)]
        values.extend((f"phi[{name}]", v) for name, v in artifact.ranked())
        return values
    if isinstance(artifact, Counterfactual):
        pairs = [("distance", artifact.distance), ("achieved_output", artifact.achieved_output)]
        pairs.extend(
            (f"delta[{name}]", d) for name, d in sorted(artifact.changed_features.items())
        )
        return pairs
    if isinstance(artifact, CausalGraph):
        return [(f"score_gain[{u}->{v}]", g) for u, v, g in artifact.edges]
    if isinstance(artifact, (list, tuple)):
        out = []
        for i, r in enumerate(artifact):
            out.append((f"rule_{i}_precision", r.precision))
            out.append((f"rule_{i}_recall", r.recall))
        return out
    return []


def assemble(
    state: AffectState,
    artifacts: Sequence[tuple[str, object, str]],  # (kind, artifact, img64)
    history: Sequence[tuple[str, str]],
    user_message: str,
    participant_id: str = "",
    precise_patterns: Sequence[str] = DEFAULT_PRECISE_PATTERNS,
) -> PromptBundle:
    """Compose the multimodal bundle for one user message.

    Attachments are capped at the most recent artifacts; history is truncated
    to the latest turns; raw numeric values are included only when the user
    message asks for them.
    """
    facts: list[str] = []
    attachments: list[Attachment] = []
    precise: list[tuple[str, float]] = []
    for kind, artifact, img64 in artifacts:
        facts.extend(_facts_for_artifact(artifact))
        caption = f"{kind} view for participant {participant_id}".strip()
        attachments.append(Attachment(caption=caption, img64=img64))
        precise.extend(_precise_for_artifact(artifact))
    attachments = attachments[-ATTACHMENT_CAP:]

    wants_precise = detect_precise_request(user_message, precise_patterns)
    return PromptBundle(
        tone=state.tone,
        system_directive=tone_directive(state),
        history=list(history)[-HISTORY_WINDOW:],
        user_message=user_message,
        attachments=attachments,
        qualitative_facts=facts,
        precise_facts=precise if wants_precise else None,
    )

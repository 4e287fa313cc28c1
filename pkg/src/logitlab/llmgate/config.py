"""Experiment and provider configuration.

Exactly five experiment presets exist, crossing information setting,
prompting strategy and modelling goal; attempting to construct any other
combination is an error.
"""

from __future__ import annotations

from dataclasses import dataclass

FULL = "full"
LIMITED = "limited"
ZERO_SHOT = "zero_shot"
CHAIN_OF_THOUGHT = "chain_of_thought"
SUGGEST = "suggest"
SUGGEST_AND_ESTIMATE = "suggest_and_estimate"

_PRESETS = {
    1: (FULL, ZERO_SHOT, SUGGEST_AND_ESTIMATE),
    2: (FULL, CHAIN_OF_THOUGHT, SUGGEST_AND_ESTIMATE),
    3: (FULL, ZERO_SHOT, SUGGEST),
    4: (FULL, CHAIN_OF_THOUGHT, SUGGEST),
    5: (LIMITED, ZERO_SHOT, SUGGEST),
}


@dataclass(frozen=True)
class ExperimentConfig:
    id: int
    information: str
    strategy: str
    goal: str

    def __post_init__(self):
        preset = _PRESETS.get(self.id)
        if preset is None:
            raise ValueError(f"unknown experiment id {self.id}")
        if (self.information, self.strategy, self.goal) != preset:
            raise ValueError(
                f"experiment {self.id} is {'/'.join(preset)}, "
                f"not {self.information}/{self.strategy}/{self.goal}"
            )

    @property
    def estimates(self) -> bool:
        return self.goal == SUGGEST_AND_ESTIMATE


def experiment(exp_id: int) -> ExperimentConfig:
    """The preset configuration for one of the five experiments."""
    if exp_id not in _PRESETS:
        raise ValueError(f"unknown experiment id {exp_id}")
    info, strategy, goal = _PRESETS[exp_id]
    return ExperimentConfig(exp_id, info, strategy, goal)


EXPERIMENTS = {i: experiment(i) for i in _PRESETS}


@dataclass(frozen=True)
class SamplingParams:
    """API generation controls; defaults match the recorded completion flow."""

    temperature: float = 1.2
    top_p: float = 0.95
    max_tokens: int = 8192

    def as_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class ProviderConfig:
    """One chat-completions endpoint.

    Credentials come from ``<NAME>_API_KEY``; the base URL may be fixed
    here or supplied via ``<NAME>_BASE_URL``.
    """

    name: str
    model: str
    base_url: str | None = None
    sampling: SamplingParams = SamplingParams()

    @property
    def key_env(self) -> str:
        return f"{self.name.upper()}_API_KEY"

    @property
    def url_env(self) -> str:
        return f"{self.name.upper()}_BASE_URL"

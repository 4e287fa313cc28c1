"""Chat-completions client with live and replay modes.

Live mode performs exactly one completion per call (no regeneration) and
persists the transcript before anyone parses it.  Replay mode returns
recorded fixtures byte-identically from
``<root>/<provider>/<model>/exp<id>.json``, which is what every test and
deterministic run uses.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import requests

from logitlab.llmgate.config import ProviderConfig
from logitlab.llmgate.prompts import PromptBundle

RETRY_ATTEMPTS = 5
RETRY_BASE_DELAY = 1.0  # seconds, doubled per attempt


class AuthError(Exception):
    pass


class RateLimited(Exception):
    pass


class FixtureMissing(Exception):
    pass


class TransportError(Exception):
    pass


@dataclass(frozen=True)
class LLMTranscript:
    provider: str
    model: str
    request_params: dict
    messages: tuple[dict, ...]
    response_text: str
    timestamp: str
    token_counts: dict

    def as_dict(self) -> dict:
        d = asdict(self)
        d["messages"] = list(self.messages)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LLMTranscript":
        return cls(
            provider=d["provider"],
            model=d["model"],
            request_params=dict(d["request_params"]),
            messages=tuple(d["messages"]),
            response_text=d["response_text"],
            timestamp=d.get("timestamp", ""),
            token_counts=dict(d.get("token_counts", {})),
        )


def _dump(d: dict) -> str:
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def fixture_path(root: str | Path, provider: str, model: str, exp_id: int) -> Path:
    return Path(root) / provider / model / f"exp{exp_id}.json"


def load_fixture(root: str | Path, provider: str, model: str, exp_id: int) -> LLMTranscript:
    path = fixture_path(root, provider, model, exp_id)
    if not path.is_file():
        raise FixtureMissing(str(path))
    return LLMTranscript.from_dict(json.loads(path.read_text(encoding="utf-8")))


def write_fixture(transcript: LLMTranscript, root: str | Path, exp_id: int) -> Path:
    path = fixture_path(root, transcript.provider, transcript.model, exp_id)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(transcript.as_dict()), encoding="utf-8")
    return path


def persist_transcript(transcript: LLMTranscript, directory: str | Path) -> Path:
    """Store a transcript under a content hash; same content, same file."""
    payload = _dump(transcript.as_dict())
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{digest}.json"
    if not path.exists():
        path.write_text(payload, encoding="utf-8")
    return path


def _live_call(bundle: PromptBundle, provider: ProviderConfig, session) -> LLMTranscript:
    key = os.environ.get(provider.key_env)
    if not key:
        raise AuthError(f"set {provider.key_env} for live calls to '{provider.name}'")
    base_url = os.environ.get(provider.url_env) or provider.base_url
    if not base_url:
        raise TransportError(
            f"no endpoint for '{provider.name}': set {provider.url_env} or base_url"
        )

    messages = []
    if bundle.system_note:
        messages.append({"role": "system", "content": bundle.system_note})
    messages.append({"role": "user", "content": bundle.as_user_message()})

    params = provider.sampling.as_dict()
    body = {"model": provider.model, "messages": messages, **params}
    url = base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    delay = RETRY_BASE_DELAY
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = session.post(url, json=body, headers=headers, timeout=300)
        except requests.RequestException as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if resp.status_code == 429:
            if attempt == RETRY_ATTEMPTS - 1:
                raise RateLimited(f"'{provider.name}' still rate-limiting after {RETRY_ATTEMPTS} attempts")
            time.sleep(delay)
            delay *= 2.0
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"'{provider.name}' rejected credentials ({resp.status_code})")
        if resp.status_code != 200:
            raise TransportError(f"'{provider.name}' returned {resp.status_code}: {resp.text[:200]}")
        data = resp.json()
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload from '{provider.name}'") from exc
        usage = data.get("usage") or {}
        return LLMTranscript(
            provider=provider.name,
            model=provider.model,
            request_params=params,
            messages=tuple(messages),
            response_text=text,
            timestamp=datetime.now(timezone.utc).isoformat(),
            token_counts={k: usage[k] for k in sorted(usage) if isinstance(usage[k], int)},
        )
    raise RateLimited(f"'{provider.name}' rate limited")  # not reached


def complete(
    bundle: PromptBundle,
    provider: ProviderConfig,
    mode: str = "replay",
    replay_dir: str | Path | None = None,
    transcript_dir: str | Path | None = None,
    session=None,
) -> LLMTranscript:
    """One completion for a prompt bundle, live or replayed.

    Live transcripts are persisted to ``transcript_dir`` (when given)
    before being returned; replayed ones are returned exactly as stored.
    """
    if mode == "replay":
        if replay_dir is None:
            raise FixtureMissing("replay mode needs a fixture directory")
        return load_fixture(replay_dir, provider.name, provider.model, bundle.experiment_id)
    if mode != "live":
        raise ValueError(f"unknown mode {mode!r}")
    transcript = _live_call(bundle, provider, session or requests.Session())
    if transcript_dir is not None:
        persist_transcript(transcript, transcript_dir)
    return transcript

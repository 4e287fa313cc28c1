"""Experiment presets, prompt assembly, transcript extraction, transport."""

from __future__ import annotations

import hashlib
import json

import pytest
import requests

from logitlab.llmgate import client, config, extract, prompts

from conftest import FIXTURES

# -- experiment presets ---------------------------------------------------------


def test_exactly_five_presets():
    assert sorted(config.EXPERIMENTS) == [1, 2, 3, 4, 5]
    assert config.experiment(1).information == config.FULL
    assert config.experiment(1).strategy == config.ZERO_SHOT
    assert config.experiment(2).strategy == config.CHAIN_OF_THOUGHT
    assert config.experiment(5).information == config.LIMITED


def test_estimation_goal_split():
    assert config.experiment(1).estimates
    assert config.experiment(2).estimates
    for i in (3, 4, 5):
        assert not config.experiment(i).estimates


def test_unknown_experiment_rejected():
    with pytest.raises(ValueError):
        config.experiment(6)
    with pytest.raises(ValueError):
        config.ExperimentConfig(0, config.FULL, config.ZERO_SHOT, config.SUGGEST)


def test_off_preset_combination_rejected():
    with pytest.raises(ValueError, match="experiment 1 is"):
        config.ExperimentConfig(
            1, config.LIMITED, config.ZERO_SHOT, config.SUGGEST_AND_ESTIMATE
        )


def test_default_sampling_params():
    params = config.SamplingParams().as_dict()
    assert params == {"temperature": 1.2, "top_p": 0.95, "max_tokens": 8192}


# -- templates -------------------------------------------------------------------

TEMPLATE_SHA256 = {
    "exp1": "884abb1cf5478ab01ce69891579599d2b24a4c09593b6fbf7cbbf879cea76b2a",
    "exp2": "15fd83258f5736d4b7a5e095136fd08b75f5f9d935145ecf4734d9dcef5054bf",
    "exp3": "74290800b69128472833b085fdb02e6fe5c3fb827613a42dccf096f7a2ac0cb5",
    "exp4": "b5d7a69d17d75b2171d4b824395fa22b524cf9a4e8bfda2870b2650c0d54a78c",
    "exp5": "8897fb6cfe10ea0290a3da80a49c04043bc5b25560e7229421e00710b0784855",
    "format_addendum": "82145822887a1783c4e3a3ad448315968778896b8fe7c4f44a53ba48c937304e",
}


@pytest.mark.parametrize("name", sorted(TEMPLATE_SHA256))
def test_template_assets_frozen(name):
    digest = hashlib.sha256(prompts.template_text(name).encode("utf-8")).hexdigest()
    assert digest == TEMPLATE_SHA256[name], f"template {name} was edited"


# -- prompt assembly --------------------------------------------------------------


def test_full_information_prompt_attaches_description_and_csv(synth_data):
    bundle = prompts.build_prompt(config.experiment(1), dataset=synth_data)
    kinds = [a["kind"] for a in bundle.attachments]
    assert kinds == ["data_description", "data_csv"]
    assert bundle.diagnostics == ()
    message = bundle.as_user_message()
    assert "## Data description" in message
    assert "## Data (CSV)" in message
    assert "time_car" in message


def test_prompt_text_is_template_plus_addendum(synth_data):
    bundle = prompts.build_prompt(config.experiment(1), dataset=synth_data)
    template = prompts.template_text("exp1")
    addendum = prompts.template_text("format_addendum")
    assert bundle.prompt_text == template.rstrip("\n") + "\n\n" + addendum
    assert "dcm-spec" in addendum


def test_paper_faithful_prompt_is_byte_identical_template(synth_data):
    bundle = prompts.build_prompt(
        config.experiment(1), dataset=synth_data, paper_faithful=True
    )
    assert bundle.prompt_text == prompts.template_text("exp1")


def test_limited_information_never_ships_csv(synth_data):
    bundle = prompts.build_prompt(
        config.experiment(5), dataset=synth_data, attach_csv=True
    )
    assert [a["kind"] for a in bundle.attachments] == ["data_description"]
    assert any("refused" in d for d in bundle.diagnostics)


def test_limited_information_works_from_description_alone():
    bundle = prompts.build_prompt(
        config.experiment(5), description="four travel modes, 1000 trips"
    )
    assert bundle.attachments[0]["content"] == "four travel modes, 1000 trips"


def test_full_information_requires_dataset():
    with pytest.raises(prompts.MissingDataset):
        prompts.build_prompt(config.experiment(1), description="words only")


def test_limited_information_requires_some_data_source():
    with pytest.raises(prompts.MissingDataset):
        prompts.build_prompt(config.experiment(5))


def test_full_information_can_opt_out_of_csv(synth_data):
    bundle = prompts.build_prompt(
        config.experiment(1), dataset=synth_data, attach_csv=False
    )
    assert [a["kind"] for a in bundle.attachments] == ["data_description"]
    assert bundle.diagnostics == ()


def test_attachment_budget_enforced(synth_data):
    with pytest.raises(prompts.AttachmentTooLarge):
        prompts.build_prompt(
            config.experiment(1), dataset=synth_data, max_attachment_tokens=10
        )


# -- extraction -------------------------------------------------------------------


def transcript_with(text: str) -> client.LLMTranscript:
    return client.LLMTranscript(
        provider="prov",
        model="mod",
        request_params={},
        messages=({"role": "user", "content": "q"},),
        response_text=text,
        timestamp="",
        token_counts={},
    )


SPEC_BLOCK = """```dcm-spec
spec m1
alt car bus
param asc_bus
param b_time generic
U(car) = b_time * time_car
U(bus) = asc_bus + b_time * time_bus
```"""


def test_extracts_spec_and_matching_claims():
    text = (
        "Here is my model.\n\n" + SPEC_BLOCK + "\n\nFit summary:\n\n"
        "```dcm-claims\n# name  LL  AIC  BIC\nm1  -950.1, 1904.2 | 1914.0\n```\n"
    )
    got = extract.extract_specs(transcript_with(text))
    assert [s.name for s in got.specs] == ["m1"]
    assert got.specs[0].metadata["provider"] == "prov"
    assert got.specs[0].metadata["model"] == "mod"
    assert got.claimed == (extract.Claim("m1", -950.1, 1904.2, 1914.0),)
    assert got.diagnostics == ()


def test_claim_with_loglik_only():
    text = SPEC_BLOCK + "\n```dcm-claims\nm1 -9.5e2\n```\n"
    got = extract.extract_specs(transcript_with(text))
    assert got.claimed == (extract.Claim("m1", -950.0, None, None),)


def test_orphaned_claim_reported_not_crashed():
    text = SPEC_BLOCK + "\n```dcm-claims\nghost -1.0\n```\n"
    got = extract.extract_specs(transcript_with(text))
    assert got.claimed == ()
    assert any("orphaned claim for 'ghost'" in d for d in got.diagnostics)


def test_duplicate_spec_names_keep_first():
    text = SPEC_BLOCK + "\n" + SPEC_BLOCK
    got = extract.extract_specs(transcript_with(text))
    assert len(got.specs) == 1
    assert any("duplicate spec name" in d for d in got.diagnostics)


def test_malformed_spec_block_reported():
    text = "```dcm-spec\nspec broken\nalt car bus\nU(car) = b_missing * time_car\n```"
    got = extract.extract_specs(transcript_with(text))
    assert got.specs == ()
    assert any("rejected" in d for d in got.diagnostics)
    assert any("no machine-readable specification" in d for d in got.diagnostics)


def test_prose_only_answer_flagged():
    got = extract.extract_specs(transcript_with("I would include time and cost."))
    assert got.specs == ()
    assert got.diagnostics == ("no machine-readable specification found",)


def test_unparseable_claim_line_flagged():
    text = SPEC_BLOCK + "\n```dcm-claims\nm1 other -1.0\n```\n"
    got = extract.extract_specs(transcript_with(text))
    assert got.claimed == ()
    assert any("not parseable" in d for d in got.diagnostics)


# -- replay and persistence --------------------------------------------------------


def test_fixture_round_trip(tmp_path):
    t = transcript_with("hello ```dcm-spec``` world")
    path = client.write_fixture(t, tmp_path, exp_id=3)
    assert path == tmp_path / "prov" / "mod" / "exp3.json"
    back = client.load_fixture(tmp_path, "prov", "mod", 3)
    assert back == t


def test_fixture_missing(tmp_path):
    with pytest.raises(client.FixtureMissing):
        client.load_fixture(tmp_path, "prov", "mod", 1)


def test_replay_mode_requires_directory(synth_data):
    bundle = prompts.build_prompt(config.experiment(1), dataset=synth_data)
    provider = config.ProviderConfig(name="prov", model="mod")
    with pytest.raises(client.FixtureMissing):
        client.complete(bundle, provider, mode="replay", replay_dir=None)


def test_unknown_mode_rejected(synth_data):
    bundle = prompts.build_prompt(config.experiment(1), dataset=synth_data)
    provider = config.ProviderConfig(name="prov", model="mod")
    with pytest.raises(ValueError):
        client.complete(bundle, provider, mode="stream")


def test_recorded_fixtures_replay_byte_identically():
    first = client.load_fixture(FIXTURES, "alpha", "alpha-large", 1)
    second = client.load_fixture(FIXTURES, "alpha", "alpha-large", 1)
    assert first == second
    assert first.provider == "alpha"
    got = extract.extract_specs(first)
    assert len(got.specs) == 3


def test_persist_transcript_content_addressed(tmp_path):
    t = transcript_with("one")
    p1 = client.persist_transcript(t, tmp_path)
    p2 = client.persist_transcript(t, tmp_path)
    assert p1 == p2
    assert len(list(tmp_path.glob("*.json"))) == 1
    p3 = client.persist_transcript(transcript_with("two"), tmp_path)
    assert p3 != p1
    stored = json.loads(p1.read_text(encoding="utf-8"))
    assert stored["response_text"] == "one"


# -- live transport -----------------------------------------------------------------


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "body": json, "headers": headers})
        out = self.outcomes.pop(0)
        if isinstance(out, Exception):
            raise out
        return out


OK_PAYLOAD = {
    "choices": [{"message": {"content": "the answer"}}],
    "usage": {"prompt_tokens": 12, "completion_tokens": 3, "note": "free"},
}


@pytest.fixture()
def live_env(monkeypatch):
    monkeypatch.setenv("PROV_API_KEY", "secret-key")
    monkeypatch.setattr(client.time, "sleep", lambda s: None)


@pytest.fixture()
def bundle():
    return prompts.build_prompt(config.experiment(5), description="tiny")


PROVIDER = config.ProviderConfig(name="prov", model="mod", base_url="https://api.example/v1")


def test_live_requires_api_key(monkeypatch, bundle):
    monkeypatch.delenv("PROV_API_KEY", raising=False)
    with pytest.raises(client.AuthError, match="PROV_API_KEY"):
        client.complete(bundle, PROVIDER, mode="live", session=FakeSession([]))


def test_live_requires_endpoint(live_env, bundle):
    bare = config.ProviderConfig(name="prov", model="mod")
    with pytest.raises(client.TransportError, match="PROV_BASE_URL"):
        client.complete(bundle, bare, mode="live", session=FakeSession([]))


def test_live_call_shape_and_transcript(live_env, bundle, tmp_path):
    session = FakeSession([FakeResponse(200, OK_PAYLOAD)])
    t = client.complete(
        bundle, PROVIDER, mode="live", transcript_dir=tmp_path, session=session
    )
    call = session.calls[0]
    assert call["url"] == "https://api.example/v1/chat/completions"
    assert call["headers"]["Authorization"] == "Bearer secret-key"
    assert call["body"]["model"] == "mod"
    assert call["body"]["temperature"] == 1.2
    assert call["body"]["messages"][0]["role"] == "user"
    assert t.response_text == "the answer"
    assert t.token_counts == {"completion_tokens": 3, "prompt_tokens": 12}
    assert len(list(tmp_path.glob("*.json"))) == 1  # persisted before return


def test_live_system_note_prepended(live_env):
    bundle = prompts.PromptBundle(
        experiment_id=5, prompt_text="p", attachments=(), system_note="be terse"
    )
    session = FakeSession([FakeResponse(200, OK_PAYLOAD)])
    client.complete(bundle, PROVIDER, mode="live", session=session)
    messages = session.calls[0]["body"]["messages"]
    assert messages[0] == {"role": "system", "content": "be terse"}
    assert messages[1]["role"] == "user"


def test_live_retries_on_429_then_succeeds(live_env, bundle, monkeypatch):
    naps = []
    monkeypatch.setattr(client.time, "sleep", naps.append)
    session = FakeSession(
        [FakeResponse(429), FakeResponse(429), FakeResponse(200, OK_PAYLOAD)]
    )
    t = client.complete(bundle, PROVIDER, mode="live", session=session)
    assert t.response_text == "the answer"
    assert naps == [1.0, 2.0]  # exponential backoff


def test_live_rate_limit_exhausted(live_env, bundle):
    session = FakeSession([FakeResponse(429)] * client.RETRY_ATTEMPTS)
    with pytest.raises(client.RateLimited):
        client.complete(bundle, PROVIDER, mode="live", session=session)
    assert len(session.calls) == client.RETRY_ATTEMPTS


def test_live_auth_rejection(live_env, bundle):
    session = FakeSession([FakeResponse(401)])
    with pytest.raises(client.AuthError):
        client.complete(bundle, PROVIDER, mode="live", session=session)


def test_live_server_error(live_env, bundle):
    session = FakeSession([FakeResponse(500, text="boom")])
    with pytest.raises(client.TransportError, match="500"):
        client.complete(bundle, PROVIDER, mode="live", session=session)


def test_live_network_failure(live_env, bundle):
    session = FakeSession([requests.ConnectionError("refused")])
    with pytest.raises(client.TransportError, match="failed"):
        client.complete(bundle, PROVIDER, mode="live", session=session)


def test_live_malformed_payload(live_env, bundle):
    session = FakeSession([FakeResponse(200, {"choices": []})])
    with pytest.raises(client.TransportError, match="malformed"):
        client.complete(bundle, PROVIDER, mode="live", session=session)

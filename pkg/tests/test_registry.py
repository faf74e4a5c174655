import threading

import pytest

from expresso import httpd
from expresso.program import BoilerplateProgram, compile_cached
from expresso.registry import (
    NoAllocation,
    OidfRegistry,
    PoolExhausted,
    RegistryClient,
    RegistryConfig,
    UnknownIdP,
    registry_service,
)

# registry behavior is circuit-agnostic; a toy program keeps ceremonies fast
TOY = (
    "program pool_toy 1\n"
    "param a private field\n"
    "param b private field\n"
    "param c public field\n"
    "assert_mul a b c\n"
)


def make_registry(idps=("idp-a", "idp-b"), pool=0, watermark=0, data_dir=None,
                  seed=b"reg-test"):
    config = RegistryConfig(
        program=BoilerplateProgram.from_source(TOY),
        idp_ids=tuple(idps),
        phase1_degree=8,
        low_watermark=watermark,
        entropy_seed=seed,
        data_dir=data_dir,
    )
    registry = OidfRegistry(config)
    if pool:
        registry.replenish(pool)
    return registry


def test_replenish_produces_distinct_artifacts():
    registry = make_registry(pool=3)
    assert registry.pending_count() == 3
    digests = {a.artifact_digest for a in registry._pending}
    assert len(digests) == 3


def test_versions_are_monotone_and_digests_published():
    registry = make_registry(pool=3)
    a1 = registry.request_artifacts("idp-a")
    a2 = registry.request_artifacts("idp-a")
    assert (a1.version, a2.version) == (1, 2)
    assert a1.artifact_digest != a2.artifact_digest
    latest = registry.get_latest_digest("idp-a")
    assert latest.version == 2
    assert latest.artifact_digest == a2.artifact_digest
    history = registry.get_digest_history("idp-a")
    assert [r.version for r in history] == [1, 2]


def test_allocation_errors():
    registry = make_registry(pool=1)
    with pytest.raises(UnknownIdP):
        registry.request_artifacts("idp-zz")
    with pytest.raises(NoAllocation):
        registry.get_latest_digest("idp-b")
    with pytest.raises(UnknownIdP):
        registry.get_latest_digest("nobody")


def test_exhaustion_sweep():
    # more requests than pooled artifacts: exactly pool-many succeed
    registry = make_registry(pool=3)
    results = []
    for idp in ("idp-a", "idp-b", "idp-a", "idp-b", "idp-a"):
        try:
            registry.request_artifacts(idp)
            results.append(True)
        except PoolExhausted:
            results.append(False)
    assert results == [True, True, True, False, False]


def test_two_tenant_isolation():
    registry = make_registry(pool=4)
    registry.request_artifacts("idp-a")
    registry.request_artifacts("idp-b")
    registry.request_artifacts("idp-b")
    hist_a = registry.get_digest_history("idp-a")
    hist_b = registry.get_digest_history("idp-b")
    assert [r.version for r in hist_a] == [1]
    assert [r.version for r in hist_b] == [1, 2]
    assert {r.artifact_digest for r in hist_a}.isdisjoint(
        {r.artifact_digest for r in hist_b})


def test_allocation_uniqueness_concurrent():
    registry = make_registry(pool=6)
    seen = []
    errors = []

    def worker(idp):
        try:
            seen.append(registry.request_artifacts(idp).artifact_digest)
        except PoolExhausted:
            errors.append(idp)

    threads = [threading.Thread(target=worker, args=("idp-a" if i % 2 else "idp-b",))
               for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(seen) == 6 and len(errors) == 2
    assert len(set(seen)) == 6  # no digest delivered twice


def test_watermark_triggers_replenish():
    registry = make_registry(pool=2, watermark=2)
    registry.request_artifacts("idp-a")
    # allocation dropped pending to 1 < watermark, so it refilled by one
    assert registry.pending_count() == 2


def test_storage_stays_bounded():
    registry = make_registry(pool=2)
    first = registry.request_artifacts("idp-a")
    assert first.artifact_digest in registry._delivered
    second = registry.request_artifacts("idp-a")
    # superseded blob dropped, pool entry consumed
    assert first.artifact_digest not in registry._delivered
    assert second.artifact_digest in registry._delivered
    assert registry.pending_count() == 0


def test_boilerplate_consistency():
    registry = make_registry(pool=1)
    program = registry.get_boilerplate()
    artifacts = registry.request_artifacts("idp-a")
    assert artifacts.program_digest == program.program_digest
    # recompiling the served program reproduces the circuit digest the
    # ceremony ran over
    compiled = compile_cached(program)
    assert artifacts.verification_key.circuit_digest == compiled.cs.digest()


def test_crash_recovery(tmp_path):
    data_dir = str(tmp_path / "registry")
    registry = make_registry(pool=3, data_dir=data_dir)
    a1 = registry.request_artifacts("idp-a")

    reborn = make_registry(pool=0, data_dir=data_dir)
    assert reborn.pending_count() == 2
    latest = reborn.get_latest_digest("idp-a")
    assert latest.version == 1
    assert latest.artifact_digest == a1.artifact_digest
    assert reborn.get_blob(a1.artifact_digest)
    a2 = reborn.request_artifacts("idp-a")
    assert a2.version == 2


def test_history_is_append_only():
    registry = make_registry(pool=2)
    registry.request_artifacts("idp-a")
    before = registry.get_digest_history("idp-a")
    registry.request_artifacts("idp-a")
    after = registry.get_digest_history("idp-a")
    assert after[:1] == before


def test_http_surface():
    registry = make_registry(pool=2)
    server = httpd.serve(registry_service(registry))
    try:
        client = RegistryClient(server.base_url, actor="idp:test")
        program = client.boilerplate()
        assert program.name == "pool_toy"
        artifacts = client.allocate("idp-a")
        assert artifacts.version == 1
        record = client.latest_digest("idp-a")
        assert record["artifact_digest"] == artifacts.artifact_digest.hex()
        assert record["version"] == 1
        history = client.digest_history("idp-a")
        assert len(history) == 1
        with pytest.raises(PoolExhausted):
            client.allocate("idp-a")
            client.allocate("idp-a")
    finally:
        server.stop()

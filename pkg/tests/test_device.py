import json

import numpy as np
import pytest

from noisebench.circuits import Circuit, x
from noisebench.densmat import OutcomeDistribution, expval_zz
from noisebench.device import (
    BatchFormatError,
    CountsRecord,
    DirectoryDevice,
    SyntheticDevice,
    batch_filename,
    counts_expval,
    counts_to_distribution,
    export_batch,
    import_batch,
    run_synthetic,
    sample_counts,
)
from noisebench.noisemodel import ideal_params, plausible_device, uniform_params


def dist(*p):
    p = np.array(p, float)
    return OutcomeDistribution(int(np.log2(len(p))), p)


class TestSampling:
    def test_deterministic_outcome(self):
        assert sample_counts(dist(1, 0), 100, seed=1).counts == {"0": 100}

    def test_zero_probability_never_drawn(self):
        rec = sample_counts(dist(0.5, 0, 0, 0.5), 10000, seed=2)
        assert set(rec.counts) == {"00", "11"}

    def test_reproducible(self):
        d = dist(0.1, 0.2, 0.3, 0.4)
        assert sample_counts(d, 8192, seed=5) == sample_counts(d, 8192, seed=5)

    def test_fair_coin_spread(self):
        d = dist(0.5, 0.5)
        bound = 4 * np.sqrt(8192 * 0.25)
        inside = sum(abs(sample_counts(d, 8192, seed=s).counts.get("0", 0) - 4096) <= bound for s in range(10_000))
        assert inside >= 9900

    @pytest.mark.parametrize("k", range(10, 17, 2))
    def test_total_variation(self, k):
        rng = np.random.default_rng(k)
        shots = 2**k
        for trial in range(5):
            p = rng.dirichlet(np.ones(8))
            got = counts_to_distribution(sample_counts(dist(*p), shots, seed=trial)).probs
            assert 0.5 * np.abs(got - p).sum() <= 5 / np.sqrt(shots)

    def test_expval_converges(self):
        p = np.random.default_rng(1).dirichlet(np.ones(4))
        rec = sample_counts(dist(*p), 2**20, seed=3)
        assert abs(counts_expval(rec) - expval_zz(dist(*p))) <= 0.01

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_counts(dist(0.7, 0.7), 10)
        with pytest.raises(ValueError):
            sample_counts(dist(1, 0), 0)


class TestExpvalFromCounts:
    @pytest.mark.parametrize(
        "counts, shots, value",
        [({"00": 4096, "11": 4096}, 8192, 1.0), ({"01": 8192}, 8192, -1.0), ({"0": 6000, "1": 2192}, 8192, 0.46484375)],
    )
    def test_values(self, counts, shots, value):
        assert counts_expval(CountsRecord("id", shots, counts)) == value

    def test_record_validation(self):
        with pytest.raises(ValueError, match="expected 10"):
            CountsRecord("abc", 10, {"0": 3})
        with pytest.raises(ValueError):
            CountsRecord("abc", 3, {"0": 3}, source="cloud")

    def test_distribution(self):
        rec = CountsRecord("id", 4, {"10": 1, "11": 3})
        assert np.array_equal(counts_to_distribution(rec).probs, [0, 0, 0.25, 0.75])


class TestSynthetic:
    def test_ideal_x(self):
        b = run_synthetic([Circuit(1, (x(0),))], ideal_params(1), shots=10, seed=0)
        assert b.records[0].counts == {"1": 10}
        assert b.params_snapshot == ideal_params(1)

    def test_full_readout_scramble(self):
        hidden = uniform_params(2, p01=0.5, p10=0.5, thermal=False)
        dev = SyntheticDevice(hidden, shots=8192, seed=4)
        b = dev.get_batch(2, 3, n=50)
        vals = [counts_expval(r) for r in b.records]
        assert abs(np.mean(vals)) < 4 / np.sqrt(8192 * 50)

    def test_reproducible(self):
        dev = SyntheticDevice(plausible_device(3), seed=9)
        a, b = dev.get_batch(3, 2, n=20), dev.get_batch(3, 2, n=20)
        assert [r.counts for r in a.records] == [r.counts for r in b.records]
        assert a.circuits == b.circuits

    def test_cells_differ(self):
        dev = SyntheticDevice(plausible_device(3), seed=9)
        assert dev.circuits(3, 2, 3) != dev.circuits(3, 3, 3)

    def test_requires_native(self):
        from noisebench.circuits import random_circuit_batch

        with pytest.raises(ValueError, match="native"):
            run_synthetic(random_circuit_batch(1, 1, 1, 0), ideal_params(1))

    def test_ids_match_circuits(self):
        b = SyntheticDevice(plausible_device(2), seed=1).get_batch(2, 2, n=5)
        assert [r.circuit_id for r in b.records] == [c.circuit_id for c in b.circuits]


class TestBatchFiles:
    @pytest.fixture
    def batch(self):
        return SyntheticDevice(plausible_device(2), shots=256, seed=3).get_batch(2, 2, n=6)

    def test_round_trip(self, batch, tmp_path):
        p = tmp_path / "b.json"
        export_batch(batch, p)
        assert import_batch(p) == batch

    def test_counts_mismatch_names_circuit(self, batch, tmp_path):
        obj = batch.to_json()
        rec = obj["records"][2]
        key = next(iter(rec["counts"]))
        rec["counts"][key] += 1
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(obj))
        with pytest.raises(BatchFormatError, match=rec["circuit_id"]):
            import_batch(p)

    def test_missing_snapshot_allowed(self, batch, tmp_path):
        obj = batch.to_json()
        del obj["params_snapshot"]
        for r in obj["records"]:
            del r["source"], r["seed"]
        p = tmp_path / "ext.json"
        p.write_text(json.dumps(obj))
        b = import_batch(p)
        assert b.params_snapshot is None
        assert {r.source for r in b.records} == {"imported"}

    def test_missing_field(self, batch, tmp_path):
        obj = batch.to_json()
        del obj["records"][1]["counts"]
        p = tmp_path / "m.json"
        p.write_text(json.dumps(obj))
        with pytest.raises(BatchFormatError, match=r"records\[1\].*counts"):
            import_batch(p)

    def test_bad_json_reports_position(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{"w": 1,\n "d": }')
        with pytest.raises(BatchFormatError, match="line 2"):
            import_batch(p)

    def test_bad_bitstring(self, batch, tmp_path):
        obj = batch.to_json()
        obj["records"][0]["counts"] = {"0x": batch.shots}
        p = tmp_path / "bs.json"
        p.write_text(json.dumps(obj))
        with pytest.raises(BatchFormatError, match="bitstring"):
            import_batch(p)

    def test_directory_device(self, batch, tmp_path):
        export_batch(batch, tmp_path / batch_filename(2, 2))
        dev = DirectoryDevice(tmp_path)
        assert dev.get_batch(2, 2) == batch
        assert dev.get_batch(3, 3) is None

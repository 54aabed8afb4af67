import filecmp
import json
import math
import os

import numpy as np
import pytest

from multicarrier.harness import BerEngine, BerRecord, Scenario, required_ebn0, run_ber
from multicarrier.harness.cli import main
from multicarrier.harness.config import ConfigError, parse_config
from multicarrier.harness.sweep import (Family, ResultSet, SweepOptions, default_grid, render_table, run_family,
                                        two_users, write_results)
from multicarrier.modem import constellation, qam_demap_labels, theoretical_ber
from multicarrier.uplink import UplinkUser, UserScenario, compose_uplink
from multicarrier.waveforms import SubbandAllocation, WaveformConfig


def _scenario(kind="cp_ofdm", order=4, grid=(2.0, 6.0), users=None, **kw):
    if users is None:
        users = (UserScenario(SubbandAllocation((100,)), order),)
    kw.setdefault("min_errors", 100)
    kw.setdefault("chunk_frames", 4)
    return Scenario(WaveformConfig(kind), users, ebn0_grid=grid, **kw)


def _two_user(kind="pcc", tau2=0.05, dfT2=0.1):
    return (UserScenario(SubbandAllocation((100,)), 16),
            UserScenario(SubbandAllocation((112,)), 16, tau2, dfT2, 10.0))


class TestScenario:
    def test_round_trip(self):
        s = _scenario(users=_two_user(), target_ber=1e-2, seed=9)
        assert Scenario.from_dict(s.to_dict()) == s

    def test_digest_ignores_grid(self):
        s = _scenario()
        assert s.digest == s.replace(ebn0_grid=(0.0,), target_ber=0.1).digest
        assert s.digest != s.replace(seed=1).digest
        assert len(s.digest) == 16

    @pytest.mark.parametrize("kw", [dict(grid=(3.0, 1.0)), dict(min_errors=50), dict(frame_symbols=2),
                                    dict(seed=-1), dict(target_ber=0.7), dict(measured_user=1)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            _scenario(**kw)

    def test_record(self):
        r = BerRecord(5.0, 0, 1000, "x", 0)
        assert r.upper_bound and r.ber == 0
        r = BerRecord(5.0, 100, 10000, "x", 0)
        assert r.ber == 0.01 and r.std_err == pytest.approx(math.sqrt(0.01 * 0.99 / 10000))
        assert not r.upper_bound


class TestEngine:
    def test_decomposed_chunk_matches_direct_simulation(self):
        s = _scenario("pcc", 16, users=_two_user())
        with BerEngine(s) as e:
            tx, zs, zn = e.chunk(3)
            _, streams = e.transmitted(3)
            users = [UplinkUser(u, t, x) for u, t, x in zip(s.users, e.transceivers, streams)]
            out = compose_uplink(users, 8.0, 0, e.noise_rng(3))
            z = e.measured.receive(out.samples, s.frame_symbols, e.equalizer.per_subcarrier,
                                   e.equalizer.per_subchannel)[..., 1:-1, :]
            np.testing.assert_allclose(zs + math.sqrt(e.n0(8.0)) * zn, z, atol=1e-10)
            direct = int(np.sum(constellation(16).bit_labels[tx] != constellation(16).bit_labels[
                qam_demap_labels(z, constellation(16))]))
            assert e._errors((tx, zs, zn), math.sqrt(e.n0(8.0))) == direct

    def test_thread_count_does_not_change_results(self):
        s = _scenario("ufmc", 16, grid=(6.0, 9.0), users=_two_user("ufmc", 0.0, 0.05))
        assert run_ber(s, threads=1) == run_ber(s, threads=3)

    def test_points_independent_of_grid(self):
        s = _scenario(grid=(2.0, 4.0, 6.0))
        full = run_ber(s)
        alone = run_ber(s.replace(ebn0_grid=(4.0,)))
        assert full[1] == alone[0]

    def test_stopping_rule(self):
        s = _scenario(grid=(0.0, 30.0), max_bits=50_000)
        with BerEngine(s) as e:
            low, high = e.run_ber()
            per_chunk = e.bits_per_chunk
        assert low.bit_errors >= 100 and low.bits % per_chunk == 0
        assert low.bit_errors - 100 < per_chunk
        assert high.bit_errors == 0 and high.upper_bound and high.bits >= 50_000

    def test_awgn_matches_theory(self):
        s = _scenario(grid=(4.0,), min_errors=2000)
        r = run_ber(s)[0]
        p = theoretical_ber(4, 4.0 - 10 * math.log10(288 / 256))
        assert abs(r.ber - p) < 3 * r.std_err

    def test_required_ebn0_awgn(self):
        s = _scenario(min_errors=400)
        r = required_ebn0(s, 1e-2)
        expected = 4.3232 + 10 * math.log10(288 / 256)
        assert not r.saturated and r.ebn0_db == pytest.approx(expected, abs=0.25)

    def test_required_saturates(self):
        s = _scenario(order=64, users=(UserScenario(SubbandAllocation((100,)), 64, dfT=0.3),))
        r = required_ebn0(s, 1e-2)
        assert r.saturated and math.isinf(r.ebn0_db)

    def test_required_at_bracket_floor(self):
        r = required_ebn0(_scenario(), 0.4)
        assert r.ebn0_db == -2.0 and not r.saturated

    def test_target_needed(self):
        with pytest.raises(ValueError):
            required_ebn0(_scenario())

    def test_invalid_threads(self):
        with pytest.raises(ValueError):
            BerEngine(_scenario(), threads=0)


CONFIG = """\
waveform:
  kind: pcc
  pcc_weighting: false
users:
  - subbands: [100]
    constellation: 16qam
  - subbands: [112]
    constellation: 16
    tau: 0.05
    gain_db: 10
ebn0_grid: [2, 4]
seed: 5
min_errors: 150
"""


class TestConfig:
    def test_parse(self):
        s = parse_config(CONFIG)
        assert s.waveform.kind.value == "pcc_ofdm" and not s.waveform.pcc_weighting
        assert s.users[1].tau == 0.05 and s.users[1].gain_db == 10.0
        assert s.ebn0_grid == (2.0, 4.0) and s.seed == 5 and s.min_errors == 150

    @pytest.mark.parametrize("text,line,field", [
        (CONFIG.replace("seed: 5", "sed: 5"), 12, "sed"),
        (CONFIG.replace("seed: 5", "seed: five"), 12, "seed"),
        (CONFIG.replace("constellation: 16qam", "constellation: 8psk"), 6, "users[0].constellation"),
        (CONFIG.replace("tau: 0.05", "tau: 0.9"), 9, "users[1].tau"),
        (CONFIG.replace("kind: pcc", "kind: fbmc"), 2, "waveform.kind"),
        (CONFIG.replace("subbands: [112]", "subbands: [106]"), 5, "users"),
        (CONFIG.replace("min_errors: 150", "min_errors: 10"), 13, "min_errors"),
    ])
    def test_diagnostics(self, text, line, field):
        with pytest.raises(ConfigError) as info:
            parse_config(text, "scn.yaml")
        err = info.value
        assert str(err).startswith("scn.yaml:")
        if line is not None:
            assert err.line == line and err.field == field

    def test_syntax_error(self):
        with pytest.raises(ConfigError) as info:
            parse_config("users: [\n", "bad.yaml")
        assert info.value.field == "<syntax>"

    def test_missing_users(self):
        with pytest.raises(ConfigError) as info:
            parse_config("seed: 1\n")
        assert info.value.field == "users"


class TestSweep:
    def test_default_grid(self):
        assert default_grid(WaveformConfig(), 16)[0] == 4.0
        assert default_grid(WaveformConfig("pcc"), 16)[0] == 2.0
        assert default_grid(WaveformConfig("pcc", pcc_weighting=False), 4)[0] == 0.0
        assert len(default_grid(WaveformConfig(), 64)) == 11

    def test_two_user_layout(self):
        s = two_users(WaveformConfig(), 4, guard=12, tau2=0.05, gain2_db=10)
        assert s.users[1].alloc.start_indices == (124,)
        assert two_users(WaveformConfig(), 4, guard=0).users[1].alloc.start_indices == (112,)

    def test_family_parse(self):
        assert Family.parse("awgn_curves") is Family.AWGN_CURVES
        assert Family.parse(Family.SPECTRA) is Family.SPECTRA
        with pytest.raises(ValueError):
            Family.parse("nope")

    def test_render(self):
        assert render_table(["a", "b"], [[1, 0.5]]) == "a,b\n1,0.5\n"
        assert json.loads(render_table(["a"], [[math.inf]], "json")) == [{"a": "inf"}]
        with pytest.raises(ValueError):
            render_table(["a"], [], "xml")

    def test_small_curve_family(self, tmp_path):
        opts = SweepOptions(seed=2, min_errors=100, max_bits=20_000, ebn0_grid=(4.0,), orders=(4,),
                            kinds=("cp_ofdm",))
        results = run_family("awgn_curves", opts)
        paths = write_results(results, tmp_path, "csv", 2, "sweep")
        manifest = json.load(open(tmp_path / "manifest.json"))
        assert manifest["seed"] == 2 and len(paths) == len(results.tables) + 1
        assert all(name.endswith(".csv") for name in manifest["files"])

    def test_envelope_and_ici_families(self):
        assert len(run_family("envelopes").tables) == 3
        assert len(run_family("ici_surfaces").tables) == 6


class TestCli:
    def _run(self, tmp_path, name, args):
        out = tmp_path / name
        assert main(args + ["--out-dir", str(out)]) == 0
        return out

    def test_ici(self, tmp_path):
        out = self._run(tmp_path, "a", ["ici", "--kind", "freq", "--N", "16", "--dfT", "0.1", "--pcc", "weighted"])
        rows = open(out / "ici_freq_weighted.csv").read().splitlines()
        assert len(rows) == 9

    @pytest.mark.parametrize("cmd", [
        ["ber", "--waveform", "pcc", "--mod", "16qam", "--grid", "4:2:6", "--min-errors", "100",
         "--max-bits", "200000", "--seed", "3"],
        ["psd", "--waveform", "ufmc", "--N", "64", "--subbands", "4,20", "--symbols", "120", "--seed", "3"],
        ["envelope", "--waveform", "pcc", "--format", "json"],
    ])
    def test_repeat_is_byte_identical(self, tmp_path, cmd):
        a = self._run(tmp_path, "a", cmd + ["--threads", "1"])
        b = self._run(tmp_path, "b", cmd + ["--threads", "2"])
        names = sorted(os.listdir(a))
        assert names == sorted(os.listdir(b)) and "manifest.json" in names
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        assert not mismatch and not errors

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(CONFIG.replace("seed: 5", "seed: five"))
        assert main(["ber", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
        assert "bad.yaml:12: seed:" in capsys.readouterr().err

    def test_value_error_exit_code(self, tmp_path):
        assert main(["ici", "--kind", "time", "--out-dir", str(tmp_path)]) == 1

    def test_config_with_flag_override(self, tmp_path):
        cfg = tmp_path / "scn.yaml"
        cfg.write_text(CONFIG)
        out = self._run(tmp_path, "o", ["ber", "--config", str(cfg), "--grid", "30", "--max-bits", "20000"])
        manifest = json.load(open(out / "manifest.json"))
        entry = manifest["files"]["ber.csv"]
        assert entry["ebn0_grid"] == [30.0] and entry["seed"] == 5 and entry["max_bits"] == 20000

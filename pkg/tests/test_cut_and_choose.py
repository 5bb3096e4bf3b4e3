import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.circuits import eval_plain, parse_bristol
from qres.crypto.rng import DeterministicRng
from qres.errors import BadIndexSet
from qres.mpc.cut_and_choose import cac_open, cac_prepare, cac_verify, choose_reveal_set
from qres.mpc.garbling import decode_output, evaluate_garbled

TINY = "2 5\n2 2 1\n1 1\n\n2 1 0 1 3 AND\n2 1 3 2 4 XOR\n"


def _corrupt_copy(pack, index):
    gc = pack.entries[index].garbled
    table = bytearray(gc.tables[0])
    table[0] ^= 0x01
    gc.tables[0] = bytes(table)


class TestCutAndChoose:
    def test_honest_pack_verifies(self, rng):
        c = parse_bristol(TINY)
        pack = cac_prepare(c, [1, 0], 5, rng)
        reveal = choose_reveal_set(pack.n, rng)
        assert len(reveal) == 4
        assert cac_verify(cac_open(pack, reveal))

    def test_unopened_copy_evaluates(self, rng):
        c = parse_bristol(TINY)
        pack = cac_prepare(c, [1, 1], 4, rng, free_xor=True)
        reveal = [0, 1, 3]
        keep = pack.unopened(reveal)
        assert keep == 2
        gc, labels, enc, dec = pack.evaluation_material(keep)
        out = decode_output(dec, evaluate_garbled(gc, labels + enc._select([1])))
        assert out == eval_plain(c, [1, 1, 1])

    def test_corrupted_copy_in_reveal_set_is_caught(self, rng):
        c = parse_bristol(TINY)
        pack = cac_prepare(c, [0, 1], 3, rng)
        _corrupt_copy(pack, 1)
        assert not cac_verify(cac_open(pack, [0, 1]))
        assert cac_verify(cac_open(pack, [0, 2]))

    def test_swapped_commitment_is_caught(self, rng):
        c = parse_bristol(TINY)
        pack = cac_prepare(c, [0, 1], 3, rng)
        openings = cac_open(pack, [0, 1])
        openings.commitments[0] = openings.commitments[2]
        assert not cac_verify(openings)

    def test_detection_rate_with_one_bad_copy(self):
        # n = 10 with 9 opened: a single corrupted copy escapes 1 time in 10
        c = parse_bristol(TINY)
        pack = cac_prepare(c, [1, 0], 10, DeterministicRng("cac-pack"))
        _corrupt_copy(pack, 7)
        trials = 2000
        chooser = DeterministicRng("cac-trials")
        caught = sum(1 for _ in range(trials) if not cac_verify(cac_open(pack, choose_reveal_set(10, chooser))))
        assert 0.88 <= caught / trials <= 0.92

    @pytest.mark.parametrize("reveal", [[0, 1, 2, 3], [0, 0, 1], [0, 1, 7], [0, 1]])
    def test_bad_reveal_sets(self, rng, reveal):
        pack = cac_prepare(parse_bristol(TINY), [0, 0], 4, rng)
        with pytest.raises(BadIndexSet):
            cac_open(pack, reveal)

    def test_needs_two_copies(self, rng):
        with pytest.raises(BadIndexSet):
            cac_prepare(parse_bristol(TINY), [0, 0], 1, rng)

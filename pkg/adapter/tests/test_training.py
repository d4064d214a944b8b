import json

import pytest

from aprkit_adapter.data import build_prompt, read_training_pairs
from aprkit_adapter.training import TrainingRunConfig, _save_steps, finetune

from conftest import write_toy_corpus


class TestConfig:
    def test_k_from_epochs_and_fraction(self):
        assert TrainingRunConfig(epochs=1, save_fraction=0.2).k == 5
        assert TrainingRunConfig(epochs=2, save_fraction=0.2).k == 10
        assert TrainingRunConfig(epochs=1, save_fraction=0.5).k == 2

    def test_uneven_fraction_rejected(self):
        with pytest.raises(ValueError):
            TrainingRunConfig(save_fraction=0.3).k


class TestSaveSteps:
    def test_seven_steps_five_saves(self):
        steps = _save_steps(7, 5)
        assert len(steps) == len(set(steps)) == 5
        assert steps[-1] == 7

    def test_exact_multiple(self):
        assert _save_steps(10, 5) == [2, 4, 6, 8, 10]

    def test_too_few_steps_rejected(self):
        with pytest.raises(ValueError):
            _save_steps(3, 5)


class TestData:
    def test_prompt_shape(self):
        assert build_prompt("Java", "a;\nb;", "void f() { }") == "Java a; b; : void f() { }"
        assert build_prompt("C", "x = 1;", "") == "C x = 1; :"

    def test_read_pairs(self, toy_corpus):
        pairs = read_training_pairs(toy_corpus)
        assert len(pairs) == 50
        assert pairs[0].input_text.startswith("Java ")
        assert " : " in pairs[0].input_text

    def test_empty_corpus_rejected(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ValueError):
            read_training_pairs(empty)


class TestFinetune:
    def test_five_checkpoints_and_loss_drop(self, toy_run):
        result, out_dir, _elapsed = toy_run
        assert len(result.checkpoint_dirs) == 5
        names = sorted(p.name for p in out_dir.glob("checkpoint*"))
        assert names == [f"checkpoint{i}" for i in range(1, 6)]
        assert result.final_loss < result.initial_loss

    def test_checkpoint_contents(self, toy_run):
        _result, out_dir, _elapsed = toy_run
        ckpt = out_dir / "checkpoint3"
        meta = json.loads((ckpt / "adapter_meta.json").read_text())
        assert meta["checkpoint"] == 2  # 0-based protocol index
        assert meta["max_in"] == 512 and meta["max_out"] == 256
        assert (ckpt / "tokenizer.json").exists()

    def test_loss_curve_written(self, toy_run):
        result, out_dir, _elapsed = toy_run
        curve = json.loads((out_dir / "loss_curve.json").read_text())
        assert curve["final_loss"] == result.final_loss
        assert len(curve["step_losses"]) == 7  # ceil(50 / 8) steps, one epoch
        assert len(curve["save_steps"]) == 5

    def test_corpus_too_small_for_k(self, tmp_path):
        corpus = write_toy_corpus(tmp_path / "tiny.jsonl", copies=0)

        # zero copies leaves an empty file; write two instances by hand
        corpus.write_text(
            '{"source": "a", "context": "", "target": "b", "language": "C"}\n' * 2
        )
        with pytest.raises(ValueError, match="checkpoints"):
            finetune(corpus, tmp_path / "out", TrainingRunConfig(epochs=1, save_fraction=0.2))

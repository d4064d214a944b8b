"""Fine-tuning with fractional-epoch checkpoint saving.

Defaults mirror the reference configuration: batch size 8, one epoch, learning
rate 1e-4, constant schedule, a checkpoint saved every 20% of the epoch. The
run produces k = epochs / save_fraction checkpoint directories (the first save
lands at the first fraction boundary, not at step 0) plus a loss curve.

The base model here is a small randomly initialized text-to-text transformer
with a byte-level BPE tokenizer trained on the corpus itself, which is enough
to exercise the training loop and the serving path at desk scale; pass
``--base-model`` to start from any locally available pretrained checkpoint
instead.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, processors, trainers
from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration

from .data import TrainingPair, read_training_pairs

META_FILE = "adapter_meta.json"


@dataclass
class TrainingRunConfig:
    epochs: int = 1
    save_fraction: float = 0.2  # j: fraction of an epoch between checkpoint saves
    batch_size: int = 8
    learning_rate: float = 1e-4
    scheduler: str = "constant"  # constant | linear | cosine
    max_in: int = 512
    max_out: int = 256
    seed: int = 0
    fp16: bool = False
    base_model: str | None = None
    vocab_size: int = 512
    d_model: int = 64
    d_ff: int = 256
    num_layers: int = 2
    num_heads: int = 4

    @property
    def k(self) -> int:
        per_epoch = 1.0 / self.save_fraction
        if abs(per_epoch - round(per_epoch)) > 1e-9:
            raise ValueError(f"save_fraction {self.save_fraction} must divide an epoch evenly")
        return self.epochs * int(round(per_epoch))


@dataclass
class TrainingResult:
    checkpoint_dirs: list[Path]
    initial_loss: float
    final_loss: float
    step_losses: list[float] = field(default_factory=list)


def _train_tokenizer(pairs: list[TrainingPair], vocab_size: int) -> PreTrainedTokenizerFast:
    tokenizer = Tokenizer(models.BPE(unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=True)
    tokenizer.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=vocab_size, special_tokens=["<pad>", "</s>", "<unk>", "<s>"]
    )
    corpus = [p.input_text for p in pairs] + [p.target_text for p in pairs]
    tokenizer.train_from_iterator(corpus, trainer)
    eos_id = tokenizer.token_to_id("</s>")
    tokenizer.post_processor = processors.TemplateProcessing(
        single="$A </s>", special_tokens=[("</s>", eos_id)]
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token="<pad>",
        eos_token="</s>",
        unk_token="<unk>",
        bos_token="<s>",
    )


def _fresh_model(config: TrainingRunConfig, tokenizer) -> T5ForConditionalGeneration:
    model_config = T5Config(
        vocab_size=len(tokenizer),
        d_model=config.d_model,
        d_ff=config.d_ff,
        d_kv=config.d_model // config.num_heads,
        num_layers=config.num_layers,
        num_heads=config.num_heads,
        decoder_start_token_id=tokenizer.pad_token_id,
        pad_token_id=tokenizer.pad_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    return T5ForConditionalGeneration(model_config)


def _batches(pairs, batch_size):
    for start in range(0, len(pairs), batch_size):
        yield pairs[start : start + batch_size]


def _encode_batch(batch, tokenizer, config):
    inputs = tokenizer(
        [p.input_text for p in batch],
        padding=True,
        truncation=True,
        max_length=config.max_in,
        return_tensors="pt",
    )
    targets = tokenizer(
        [p.target_text for p in batch],
        padding=True,
        truncation=True,
        max_length=config.max_out,
        return_tensors="pt",
    )
    labels = targets.input_ids.clone()
    labels[labels == tokenizer.pad_token_id] = -100
    return inputs, labels


def _corpus_loss(model, pairs, tokenizer, config) -> float:
    model.eval()
    total = 0.0
    batches = 0
    with torch.no_grad():
        for batch in _batches(pairs, config.batch_size):
            inputs, labels = _encode_batch(batch, tokenizer, config)
            loss = model(**inputs, labels=labels).loss
            total += float(loss)
            batches += 1
    model.train()
    return total / batches


def _save_steps(total_steps: int, k: int) -> list[int]:
    """The k save boundaries; the final step is always the k-th save."""
    if total_steps < k:
        raise ValueError(
            f"{total_steps} optimizer steps cannot yield {k} distinct checkpoints; "
            "use a larger corpus or fewer checkpoints"
        )
    steps = []
    for c in range(1, k + 1):
        step = max(1, round(total_steps * c / k))
        if steps and step <= steps[-1]:
            step = steps[-1] + 1
        steps.append(step)
    assert steps[-1] <= total_steps
    return steps


def _make_scheduler(optimizer, kind: str, total_steps: int):
    if kind == "constant":
        return torch.optim.lr_scheduler.LambdaLR(optimizer, lambda _: 1.0)
    if kind == "linear":
        return torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
        )
    if kind == "cosine":
        return torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda step: 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
        )
    raise ValueError(f"unknown scheduler: {kind!r}")


def finetune(corpus_path, out_dir, config: TrainingRunConfig) -> TrainingResult:
    """Train on the corpus export, saving a checkpoint every j-fraction step."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)

    pairs = read_training_pairs(corpus_path)

    if config.base_model:
        from transformers import AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(config.base_model)
        model = T5ForConditionalGeneration.from_pretrained(config.base_model)
    else:
        tokenizer = _train_tokenizer(pairs, config.vocab_size)
        model = _fresh_model(config, tokenizer)

    steps_per_epoch = math.ceil(len(pairs) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    save_steps = _save_steps(total_steps, config.k)

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    scheduler = _make_scheduler(optimizer, config.scheduler, total_steps)
    autocast = config.fp16 and torch.cuda.is_available()

    initial_loss = _corpus_loss(model, pairs, tokenizer, config)

    checkpoint_dirs: list[Path] = []
    step_losses: list[float] = []
    step = 0
    model.train()
    for _epoch in range(config.epochs):
        order = list(pairs)
        rng.shuffle(order)
        for batch in _batches(order, config.batch_size):
            inputs, labels = _encode_batch(batch, tokenizer, config)
            optimizer.zero_grad()
            if autocast:
                with torch.autocast("cuda", dtype=torch.float16):
                    loss = model(**inputs, labels=labels).loss
            else:
                loss = model(**inputs, labels=labels).loss
            loss.backward()
            optimizer.step()
            scheduler.step()
            step += 1
            step_losses.append(float(loss.detach()))
            if step in save_steps:
                index = save_steps.index(step)
                checkpoint_dirs.append(
                    _save_checkpoint(out_dir, index, step, model, tokenizer, config)
                )

    final_loss = _corpus_loss(model, pairs, tokenizer, config)

    curve = {
        "initial_loss": initial_loss,
        "final_loss": final_loss,
        "step_losses": step_losses,
        "save_steps": save_steps,
        "config": {
            "epochs": config.epochs,
            "save_fraction": config.save_fraction,
            "k": config.k,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "scheduler": config.scheduler,
            "seed": config.seed,
        },
    }
    (out_dir / "loss_curve.json").write_text(json.dumps(curve, indent=2), encoding="utf-8")

    return TrainingResult(
        checkpoint_dirs=checkpoint_dirs,
        initial_loss=initial_loss,
        final_loss=final_loss,
        step_losses=step_losses,
    )


def _save_checkpoint(out_dir: Path, index: int, step: int, model, tokenizer, config) -> Path:
    ckpt_dir = out_dir / f"checkpoint{index + 1}"
    model.save_pretrained(ckpt_dir)
    tokenizer.save_pretrained(ckpt_dir)
    meta = {
        "checkpoint": index,
        "step": step,
        "max_in": config.max_in,
        "max_out": config.max_out,
    }
    (ckpt_dir / META_FILE).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return ckpt_dir

"""Train a small 4-class model on a synthetic corpus and score it.

Generates a desk-scale corpus (deterministic given the seed), trains with
Adam and early stopping, then prints the training history and the
validation confusion matrix. Takes a couple of minutes on a laptop.
"""

import tempfile

import numpy as np

from callseg import (
    ModelConfig,
    SynthSpec,
    TrainConfig,
    build_crnn,
    evaluate,
    label_names,
    save_checkpoint,
    synth_corpus,
    train,
)

corpus = tempfile.mkdtemp(prefix="callseg_demo_corpus_")
spec = SynthSpec(train_speakers_per_class=4, val_speakers_per_class=1,
                 utterances_per_speaker=12, utterance_seconds=2.0)
manifest = synth_corpus(spec, seed=11, out_root=corpus)
print(f"corpus at {corpus}: "
      f"{manifest.splits['train']['utterances']} train / "
      f"{manifest.splits['validation']['utterances']} validation utterances")

config = ModelConfig(conv_filters=(6, 6, 6, 6), rnn_hidden=(12, 12),
                     n_classes=4, input_shape=(96, 200))
model = build_crnn(config, seed=5)
model, history = train(model, corpus, TrainConfig(max_epochs=40, patience=15, seed=5))

print(f"\nepoch  train_loss  train_acc  val_loss  val_acc")
for i in range(len(history)):
    print(f"{i + 1:5d}  {history.train_loss[i]:10.4f}  {history.train_acc[i]:9.3f}"
          f"  {history.val_loss[i]:8.4f}  {history.val_acc[i]:7.3f}")
print(f"best epoch: {history.best_epoch} "
      f"(val_acc {history.val_acc[history.best_epoch - 1]:.3f})")

result = evaluate(model, corpus, "validation")
names = label_names(4)
print(f"\nvalidation accuracy {result.accuracy:.3f}; confusion (rows = truth):")
width = max(len(n) for n in names)
for name, row in zip(names, result.confusion):
    print(f"  {name:{width}s}  {np.array2string(row)}")

save_checkpoint(model, "demo_model.ckpt")
print("\nwrote demo_model.ckpt")

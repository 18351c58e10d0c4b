#!/usr/bin/env python3
"""Open-set enrollment and identification with a small trained encoder.

Enroll a few subjects from training frames, then probe the gallery with
frames of enrolled subjects and with strangers. Identification returns
UNKNOWN when nobody is within the threshold.
"""
from thermoface import (EncoderConfig, Gallery, SynthConfig, TrainConfig,
                        build_encoder, enroll, generate_synthetic, identify,
                        identify_scores, make_pairs, select_threshold, train, verify)
from thermoface.evaluation import pair_distances
from thermoface.data import DatasetManifest

manifest = generate_synthetic(SynthConfig(n_identities=6, frames_per_identity=16, seed=21))
frames = {sid: [manifest.load(i) for i in range(len(manifest))
                if manifest[i].subject_id == sid]
          for sid in manifest.subjects()}
known = ["id000", "id001", "id002", "id003"]
strangers = ["id004", "id005"]

# train on the known subjects only
train_entries = tuple(e for e in manifest.entries if e.subject_id in known)
train_set = DatasetManifest(entries=train_entries).load_all()
params = build_encoder(EncoderConfig(seed=0))
params, _history = train(TrainConfig(epochs=12, pairs_per_epoch=120, seed=2),
                         train_set, params)

# pick a threshold from held-out frames of the known subjects
holdout = DatasetManifest(entries=train_entries[::2])
labels = [e.subject_id for e in holdout.entries]
pairs = make_pairs(labels, 80, seed=0)
distances, truths = pair_distances(params, holdout, pairs)
tau = select_threshold(distances, truths, "max_f1")
print(f"trained on {known}; decision threshold tau = {tau:.3f}")

# =========================================================================
# Enroll the first half of each known subject's frames
# =========================================================================
gallery = Gallery()
for sid in known:
    gallery = enroll(gallery, sid, frames[sid][:8], params)
print(f"gallery holds {gallery.subjects()}")

# =========================================================================
# Verify and identify with unseen frames
# =========================================================================
print("\nprobes from enrolled subjects:")
for sid in known:
    probe = frames[sid][12]
    accepted, d = verify(gallery, sid, probe, params, tau)
    match = identify(gallery, probe, params, tau)
    print(f"  {sid}: verify {'ACCEPT' if accepted else 'REJECT'} (d={d:.3f}), "
          f"identify -> {match}")

print("\nprobes from strangers (should be rejected):")
for sid in strangers:
    probe = frames[sid][0]
    match = identify(gallery, probe, params, tau)
    scores = identify_scores(gallery, probe, params)
    nearest = min(scores, key=scores.get)
    print(f"  {sid}: identify -> {match or 'UNKNOWN'} "
          f"(nearest enrolled {nearest} at d={scores[nearest]:.3f})")

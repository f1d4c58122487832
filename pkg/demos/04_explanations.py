"""Why did the model recommend that? Local surrogate explanations.

Every recommendation carries a per-feature attribution fitted by perturbing
the candidate's feature vector around the training data's statistics and
ridge-fitting a weighted linear surrogate to the model's responses. The
output is rendered three ways: raw weights, reader-friendly sentences, and
a grounded prompt for an external language model to rewrite.
"""

import numpy as np

from regionrec import (
    EngineConfig,
    Level,
    SyntheticSpec,
    build_profiles,
    filter_tourists,
    generate_synthetic,
    train_bundle,
)
from regionrec.explain import LimeConfig, lime_explain, finalize_explanation
from regionrec.gbdt import predict_proba_batch
from regionrec.interest import build_dataset

# Train a city-level model on a small generated world.
spec = SyntheticSpec(
    n_cities=10,
    n_neighborhoods_per_city=4,
    n_users=40,
    n_archetypes=3,
    reviews_per_user_range=(40, 60),
    noise_rate=0.1,
    rng_seed=30,
)
regions, registry, log, _ = generate_synthetic(spec)
log = filter_tourists(log, min_cbsas=6)
profiles = build_profiles(log)
config = EngineConfig(k=2, rng_seed=30)
train, test = build_dataset(profiles, regions, registry, config, Level.CITY)
bundle = train_bundle(train, registry, Level.CITY)
print(f"trained on {len(train)} examples; "
      f"{len(bundle.model.trees)} trees in the ensemble")

# The background the explainer perturbs around is the training features'
# mean/std, captured at training time and stored with the model.
print(f"background mean[:4]: {np.round(bundle.background.mean[:4], 3)}")

# Explain one held-out example's score.
example = test[0]
predict_fn = lambda A: predict_proba_batch(bundle.model, np.atleast_2d(A))
lime_config = LimeConfig(n_samples=5000, rng_seed=7)
explanation = lime_explain(
    predict_fn, example.features, bundle.background, lime_config
)
print(f"\nmodel score for {example.region.code}: "
      f"{float(predict_fn(example.features)[0]):.4f}")
print(f"surrogate fit r2: {explanation.surrogate_r2:.4f}")

print("\nstrongest feature attributions (negative pulls the score up when")
print("the distance shrinks; *_to_top compares against liked places):")
ranked = sorted(explanation.attributions, key=lambda kv: -abs(kv[1]))
for name, weight in ranked[:5]:
    distance = explanation.raw_distances[name]
    print(f"  {name:<22} weight {weight:+.4f} at distance {distance:.3f}")

# Same sampler seed, same explanation — determinism is part of the contract.
again = lime_explain(predict_fn, example.features, bundle.background, lime_config)
print(f"\nrerun with the same seed is identical: {explanation == again}")

# finalize_explanation renders the sentences and the rewrite prompt.
explanation = finalize_explanation(
    explanation,
    region_name="Cedarport",
    liked_names=["Harborview", "Bayside"],
    disliked_names=["Dry Mesa"],
    top_n=3,
)
print("\nrendered for the traveler:")
print("  " + explanation.rendered_text.replace("\n", "\n  "))
print("\nprompt an external writer model would receive:")
print("  " + explanation.llm_prompt.replace("\n", "\n  "))

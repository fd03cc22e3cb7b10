# %% [markdown]
# # Debiasing for a stratum-adjusted regression coefficient
#
# The target is the therapy effect on blood pressure adjusted for stage,
# estimated by partialling out stratum means. The shift adds
# b * (A - E(A | X)) to the synthetic outcome, which moves the generator's
# coefficient by b without changing any stratum mean of the outcome.

# %%
from synthdebias import GeneratorSpec, LinCoef, debias_regression, estimate, fit_generator, sample_dgp
from synthdebias.streams import make_rng

spec = LinCoef("bp", "therapy", ("stage",))
original = sample_dgp(500, rng=make_rng(11))
print("original-data estimate", round(estimate(original, spec).theta, 3), "(truth -20)")

# %%
for kind in ("parametric", "smoothed_bootstrap", "gaussian_copula"):
    gen = fit_generator(GeneratorSpec(kind), original, make_rng(12))
    _, rep = debias_regression(gen, original, spec, k_large=200_000, k_cond=20_000, rng=make_rng(13))
    print(f"{kind:20s} generator coef {rep.theta_hat_Pn:7.3f}  b {rep.shift:+.3f}  "
          f"b after shift {rep.residual_b_after_shift:+.3f}")

# %% [markdown]
# The residual bias after the shift is pure Monte Carlo noise: recomputing
# b against the shifted generator gives a value near zero.

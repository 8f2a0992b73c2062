# %% [markdown]
# # Scoring methods and sweeping the concept count
#
# Editing methods trade off two axes: how completely targets are removed
# (lower residual accuracy is better) and how much quality survives (higher
# is better). A harmonic combination punishes methods that sacrifice either
# axis. Three normalizations are provided; their rankings agree on clear
# winners and differ only in how they spread the middle of the field.

# %%
from scapre import MethodScore, overall_accuracy, uq_minmax, uq_rank, uq_sigmoid

scores = [
    MethodScore("aggressive", 2.0, 24.1),   # erases everything, wrecks quality
    MethodScore("timid", 78.0, 31.1),       # keeps quality, forgets nothing
    MethodScore("balanced", 6.5, 30.2),
    MethodScore("middling", 40.0, 29.0),
]
baseline = MethodScore("unedited", 88.0, 31.4)

sig = uq_sigmoid(scores, baseline=baseline)
mm = uq_minmax(scores)
rk = uq_rank(scores)
print(f"{'method':12s} {'sigmoid':>8s} {'minmax':>7s} {'rank':>6s}")
for s in scores:
    print(
        f"{s.label:12s} {sig.values[s.label]:8.2f} "
        f"{mm.values[s.label]:7.3f} {rk.values[s.label]:6.3f}"
    )

# %% [markdown]
# The sigmoid variant standardizes against the population (including the
# unedited baseline row) before squashing, so it is shift-invariant on each
# axis; min-max is affine-invariant; rank only sees the ordering. A method
# that is worst on either axis scores zero under min-max and rank — the
# harmonic mean with a zero component is defined as zero.
#
# `overall_accuracy` condenses an unlearn/preserve pair the same way:

# %%
print("strong edit, strong preservation:", overall_accuracy(5.0, 80.0))
print("erases nothing:                  ", overall_accuracy(85.0, 86.0))
print("erases everything incl. bystanders:", overall_accuracy(2.0, 6.0))

# %% [markdown]
# ## Scaling sweep
#
# The sweep grows the number of simultaneously erased concepts at fixed
# dimensions and emits one row per count under a fixed CSV schema. Rows are
# independent runs; the solve stays exact and the erasure error stays flat
# as the count grows, which is the point of the closed form.

# %%
from scapre import EditConfig, SyntheticModelSpec, scaling_sweep

base = SyntheticModelSpec(d_in=256, d_out=96, m_targets=1, m_preserved=8, seed=0)
rows = scaling_sweep(base, [2, 5, 10, 20], EditConfig(beta=0.0))
print(f"{'m':>4s} {'residual':>10s} {'max erase':>10s} {'wall ms':>9s}")
for row in rows:
    print(
        f"{row['m']:4d} {row['sylvester_residual']:10.2e} "
        f"{row['max_erasure_err']:10.4f} {row['wall_ms']:9.1f}"
    )

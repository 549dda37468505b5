# %% [markdown]
# # Reading the fidelity off a Hong-Ou-Mandel dip
#
# When one logical state is stored, the fidelity equals `p0 + p1`: the
# probability the photon is lost plus the weight of its dominant mode.  Both
# are measured by interfering the retrieved photon with a shaped reference
# photon and counting coincidences.

# %%
from qmfidelity.measurement import (
    ModeSpectrum,
    OverlapVector,
    aligned_identity,
    detection_probabilities,
    fidelity_case_i,
    tune_pulse_shaper,
)

spectrum = ModeSpectrum(p=(0.5, 0.3), p0=0.2)

# %% [markdown]
# Scan a few pulse-shaper settings.  Each is described by its overlap with
# the retrieved photon's modes.  The best setting maximises `P1 + P2 - P12`.

# %%
settings = {
    "detuned": OverlapVector((0.4, 0.1)),
    "aligned": OverlapVector((1.0, 0.0)),
    "second mode": OverlapVector((0.0, 1.0)),
    "halfway": OverlapVector((0.5, 0.5)),
}
for name, o in settings.items():
    d = detection_probabilities(spectrum, o)
    print(f"{name:12s} P1={d.P1:.3f} P2={d.P2:.3f} P12={d.P12:.3f} objective={d.objective:.3f}")

best, probs = tune_pulse_shaper(spectrum, list(settings.values()))
print("selected:", list(settings)[best])

# %% [markdown]
# At the aligned setting, the objective equals `p0 + p1`, which is the fidelity.

# %%
print("p0 + p1 =", aligned_identity(spectrum))
print("fidelity:", fidelity_case_i(aligned_identity(spectrum)))

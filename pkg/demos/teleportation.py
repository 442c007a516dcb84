# %% [markdown]
# Teleportation with continuous feedback
#
# Right after the Bell measurement Bob holds a maximally mixed qubit. The
# feedback, modelled as a jump process with rate gamma, rotates the four
# outcome branches back onto |psi>. The logical map is depolarizing with
# Bloch contraction 1 - e^{-gamma t}, which starts at zero: E_0 is singular.

# %%
import numpy as np

from nmqip.dynamics import canonical_rates, logical_map_family, propagate
from nmqip.exceptions import SingularMapError
from nmqip.linalg import partial_trace
from nmqip.measures import blp_measure, closed_form_R, family_decay_rate, rate_grid, rhp_measure
from nmqip.models import TeleportationModel

# %% Fidelity with the input state
psi = np.array([0.6, 0.8j])
model = TeleportationModel(gamma=1.0, psi=psi)
ts = np.linspace(0, 5, 11)
traj = propagate(model.generator, model.initial_state(), ts, model.composite_dims)
for t, rho in zip(ts, traj.matrices):
    bob = partial_trace(rho, model.composite_dims, keep=[model.logical_index])
    print(f"t={t:.1f}  F={np.vdot(psi, bob @ psi).real:.6f}  closed form {1 - np.exp(-t) / 2:.6f}")

# %% The generator does not exist at t=0
try:
    canonical_rates(logical_map_family(model, [0.0, 1.0]), [0.0])
except SingularMapError as exc:
    print("t=0:", exc)

# %% Three equal, negative rates on a log-spaced window
grid = rate_grid(0.05, 5, 400, "log")
fam = logical_map_family(model, grid)
rates = canonical_rates(fam, grid[::80])
print(np.column_stack([grid[::80], rates]))

# %% Every rate is negative, yet information flows *in* monotonically
R = family_decay_rate(fam, grid).value
print(f"R={R:.5f}  closed form {closed_form_R('TELEPORT', gamma=1, dt=0.05, T=5):.5f}")
print(f"RHP={rhp_measure(fam, 0.05, 5).value:.5f}")
print(f"BLP={blp_measure(fam, 0.05, 5).value:.5f}  e^-0.05 - e^-5={np.exp(-0.05) - np.exp(-5):.5f}")

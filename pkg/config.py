# Number of worker threads for sweeps and audits. The environment variable
# MBQKD_THREADS takes precedence.
threads = 1

# Protocol of a sweep, 'mdiqkd' or 'bb84'
protocol = 'mdiqkd'

# 'single-photon' or 'coherent'. Coherent sources are handled with either
# infinitely many decoy intensities ('infinite') or with vacuum, weak and
# signal intensities ('three', BB84 only).
source = 'single-photon'
decoy = 'infinite'

# Loss range in dB. For MDIQKD the loss is per arm.
loss_start = 0.0
loss_stop = 40.0
loss_step = 1.0

# Dark count probability per detector and pulse (MDIQKD)
d = 1e-5

# Dark count probability per pulse and encoding misalignments in degrees
# (BB84)
p_d = 1e-5
a = 0.0
b = 0.0
c = 0.0

# 'formula' uses the closed expressions, 'states' derives every entry of the
# table from the misaligned states
mode = 'formula'

# Mean photon numbers of signal and weak decoy
mu = 0.5
nu = 0.1

# Pulses per encoding state and the number of standard deviations used to
# widen every observed frequency. 'inf' means exact statistics.
n_pulses = 'inf'
k_sigma = 5.0

# Search box [0, c_max] of the coefficients, angles per pair in the coarse
# scan and the number of starting points of the pattern search
c_max = 10.0
coarse_grid = 41
multistarts = 32
#refine_rounds = 4
#refine_shrink = 0.2
#feasibility_tol = 1e-9

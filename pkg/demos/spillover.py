"""
Spillover check
===============

A 10-patch controller designed on the 50-element model is connected to a
200-element model of the same string. The patch map is rebuilt (20 elements
per patch) while the controller matrices stay as designed.
"""

# %%
import numpy as np

from phshape import SimConfig, settle_time, stability_margin, string_closed_loop

cfg = SimConfig(dt=5e-5, t_final=3e-2, record_stride=1)
coarse = string_closed_loop(m=10, cfg=cfg)
fine = string_closed_loop(m=10, cfg=cfg, p_sim=200)

# %%
ps = fine.poles()
print("closed-loop size:", fine.loop.A.shape)
print("stability margin:", stability_margin(ps))
real = ps.real_poles()
print("most negative real poles:", np.round(real[:3], 2))

# %%
for name, r in (("p = 50", coarse), ("p = 200", fine)):
    tr = r.trajectory
    print(f"{name:8s} settle 2%: {1e3 * settle_time(tr.times, tr.endpoint).seconds:5.2f} ms"
          f"   5%: {1e3 * settle_time(tr.times, tr.endpoint, 0.05).seconds:5.2f} ms")
fine.trajectory.to_csv("spillover_p200.csv")

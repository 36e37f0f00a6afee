# %% [markdown]
# # Talking to the simulated syringe pump
#
# The pump speaks a line protocol over TCP. Volumes convert to microsteps of
# the lead-screw drive, and every reply carries the simulated duration.

# %%
from labseq.pump import PumpClient, PumpConfig, serve, transfer_duration

cfg = PumpConfig()
print(f"{int(cfg.microsteps_per_ul)} microsteps per uL, {cfg.step_rate:g} microsteps/s")
print("10 uL takes", transfer_duration(cfg, 10), "s")

# %%
with serve(cfg) as server, PumpClient(server.endpoint) as pump:
    for line in ("STATUS", "DRAW 10.0", "PUSH 4.5", "DRAW 99", "FLUSH 1", "STATUS"):
        print(f"> {line:10} < {pump.request(line)}")

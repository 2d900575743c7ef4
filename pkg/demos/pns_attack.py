"""
Catching a photon-number-splitting attack
=========================================

The attacker blocks every single-photon pulse and forwards multi-photon
pulses losslessly. Tuned so the one-laser detection rate looks plausible,
it still cannot match all five intensity classes at once, and the bound
on y1 falls to zero.
"""
from decoyqkd import Beamsplitter, SessionConfig, analyze_session, run_session
from decoyqkd.sim import pns_channel

honest = analyze_session(run_session(SessionConfig(10**7, 0.5, Beamsplitter(0.1, 3e-6), seed=1)))
attack_channel = pns_channel(eta_eve=0.0, y0=3e-6)
attacked_record = run_session(SessionConfig(10**7, 0.5, attack_channel, seed=1))
attacked = analyze_session(attacked_record)

for name, rep in (("honest", honest), ("attacked", attacked)):
    print(f"{name:9s} y1 in [{rep.y1_bounds.lo:.4f}, {rep.y1_bounds.hi:.4f}] "
          f"s_bound={rep.s_bound} abort={rep.abort}")

# The one-laser click rate under attack is 1 - exp(-mu)(1 + mu) ~ 0.090,
# close to what a 19% honest channel would give.
t = attacked_record.level(1).trials
print(f"\none-laser click rate under attack: {t.rate:.4f}")
for level in attacked_record.levels:
    print(f"  j={level.j} rate={level.trials.rate:.4f}")

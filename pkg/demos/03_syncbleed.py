"""SyncBleed against a synchronization-based protocol, and why TREVOR is immune.

The baseline protocol sends the first 0.25 s of raw audio so the peer can
align. An eavesdropper outside the room pairs those snippets with its own
muffled recordings, fits the wall's transfer function, and inverts it on
later sessions. TREVOR never sends a snippet, so there is nothing to fit.
"""

from trevor.errors import InsufficientDataError
from trevor.experiments import attack_env
from trevor.protocol import PairingConfig
from trevor.syncbleed import run_attack

env = attack_env(seed=3)

rep = run_attack(env, training_rounds=64, attack_rounds=10, seed=3)
print(f"sync baseline, {rep.training_pairs} snooped snippets")
print(f"  adversary BER without attack {rep.ber_without_attack:.3f}")
print(f"  adversary BER with attack    {rep.ber_with_attack:.3f}")
print(f"  commitments opened           {rep.reconciliation_successes}/{rep.trials}")

try:
    run_attack(env, training_rounds=8, attack_rounds=1, cfg=PairingConfig())
except InsufficientDataError as exc:
    print("trevor:", exc)

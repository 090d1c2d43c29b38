"""One private count through the shuffler.

Each party turns its bit into noisy additive shares modulo a prime. The
analyzer only sees the shuffled multiset of shares, and summing it modulo q
recovers the true count plus the noise.
"""

import numpy as np

from shuffleparity.counting import CountingConfig, count_protocol
from shuffleparity.shuffle import PartyStatus

rng = np.random.default_rng(3)
bits = rng.integers(0, 2, size=40)
cfg = CountingConfig(n=40, eps=1.0, c=3, splits=3)
print(f"true count {bits.sum()}, modulus q = {cfg.q}")

estimate, transcript = count_protocol(bits, cfg, rng)
bag = transcript.final
print(f"analyzer sees {len(bag)} messages; first few (tag, value, multiplicity): {bag.triples()[:4]}")
print(f"estimate {estimate}")

# A third of the parties go silent. The estimate is of the honest count.
status = PartyStatus.drop_random(40, 26, rng)
estimate, transcript = count_protocol(bits, cfg, rng, status)
print(f"\nwith {status.honest.sum()} honest parties: honest count {bits[status.honest].sum()}, estimate {estimate}")

# Nobody sends anything: the empty bag decodes to 0 and is flagged.
estimate, transcript = count_protocol(bits, cfg, rng, PartyStatus(np.zeros(40, dtype=bool)))
print(f"no honest parties: estimate {estimate}, flags {transcript.flags}")

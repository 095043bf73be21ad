"""
Checking fairness criteria for groups of agents
===============================================

Build a small two-group instance, ask whether individual members consider
an allocation fair under different criteria, and produce the per-group
democratic report.
"""

from fractions import Fraction

from groupfair import (
    Allocation,
    EFc,
    FractionMMS,
    Instance,
    MMS,
    PROPc,
    democratic_report,
    mms_share,
)
from groupfair.model import AdditiveValuation, BinaryValuation, Bundle

# Two groups share four goods.  The first group's members only care about
# specific goods (binary valuations); the second group's members weigh
# every good (additive valuations).
goods = ("piano", "bicycle", "lamp", "rug")
group_one = [
    BinaryValuation(Bundle.from_indices([0, 1], 4)),  # wants piano+bicycle
    BinaryValuation(Bundle.from_indices([1, 2], 4)),  # wants bicycle+lamp
]
group_two = [
    AdditiveValuation((Fraction(5), Fraction(1), Fraction(1), Fraction(3))),
    AdditiveValuation((Fraction(2), Fraction(2), Fraction(2), Fraction(2))),
]
inst = Instance.from_valuations(goods, [group_one, group_two])

# Give piano+bicycle to group 1 and lamp+rug to group 2.
alloc = Allocation((0, 0, 1, 1), k=2)

# Each criterion answers per agent: is this allocation fair *to me*?
for criterion in (EFc(1), PROPc(1), MMS(), FractionMMS(Fraction(1, 2))):
    report = democratic_report(inst, alloc, criterion)
    print(f"{criterion.name:18} happy = {report.happy}  h = {report.h}")

# The maximin share underlying MMS-style criteria is exact arithmetic:
# the best worst-bundle value over all 2-partitions of the goods.
agent = inst.groups[1][0]
print("group 2 member 1 maximin share:", mms_share(agent.valuation, 2))

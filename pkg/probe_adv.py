"""Grid probe: adversarial universe candidates for the mutant suite."""
import time

from epsilab.ground import ZERO, ONE, TWO, GEntries, GTimesPi, GSet, PatAll, PatOnly
from epsilab.logic import Context
from epsilab.machine import (
    I_TERM,
    K_TERM,
    Stack,
    TerminationPole,
    Y_TERM,
    make_pool,
)
from epsilab.suite import (
    BOMB_STACK,
    PI0,
    mutant_suite,
    paper_suite,
    run_check,
    seeded_universe,
    suite_symbols,
)

S_I = PI0.push(I_TERM)
S_K = PI0.push(K_TERM)
S_Y = PI0.push(Y_TERM)
S_KI = PI0.push(I_TERM).push(K_TERM)   # gate
S_YI = PI0.push(I_TERM).push(Y_TERM)   # poison (kills I and Y)
S_YY = PI0.push(Y_TERM).push(Y_TERM)

def ent(*rows):
    return GEntries(tuple(rows))

def fs(*stacks):
    return PatOnly(frozenset(stacks))

def build(universe, depth=2):
    pool = make_pool({"K": K_TERM}, depth=depth, fuel=10_000)
    return Context(pool, TerminationPole(10_000), tuple(universe), suite_symbols())

def evaluate(name, universe, depth=2):
    ctx = build(universe, depth)
    t0 = time.time()
    papers = [run_check(c, ctx) for c in paper_suite(ctx)]
    ok = sum(1 for r in papers if r["ok"])
    muts = [run_check(c, ctx) for c in mutant_suite(ctx)]
    killed = sum(1 for r in muts if r["verdict"] == "refuted")
    dt = time.time() - t0
    print(f"{name:<14} d={depth} paper {ok:>2}/15  mutants {killed:>2}/{len(muts)}  {dt:5.1f}s")
    if ok < 15:
        for r in papers:
            if not r["ok"]:
                print("    paper-FAIL:", r["check"])
    return papers, muts

base = list(seeded_universe())

# role names per the S1/S7 hand analysis
advC = ent((ZERO, fs(PI0)))
advB = ent((advC, fs(S_YI)))                       # 'z eps advB' admits all pool
advA = ent((advB, fs(PI0, S_K)))                   # pi0 lands in ||advB eps/ advA||
u1 = base + [advC, advB, advA]

# gate-heavy: every row carries the gate stack + pi0
gB = ent((ZERO, fs(S_KI, PI0)))
gA = ent((gB, fs(S_KI, PI0)))
u2 = base + [gB, gA]

# bomb-heavy
bB = ent((ZERO, fs(S_Y)), (ONE, fs(S_Y, PI0)))
u3 = base + [bB]

evaluate("baseline", base)
evaluate("roles-u1", u1)
evaluate("gates-u2", u2)
evaluate("bombs-u3", u3)
evaluate("u1+u2", base + [advC, advB, advA, gB, gA])
evaluate("roles-u1-d3", u1, depth=3)

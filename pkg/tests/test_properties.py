import itertools

from hypothesis import given, settings, strategies as st

from popelect import core
from popelect.agent import AgentState
from popelect.params import ProtocolParams

PHI, PSI, GAMMA = 3, 4, 16
CFG = ProtocolParams(1024, gamma=GAMMA, phi=PHI, psi=PSI, drag_final_epoch_only=False).to_array()

ROLES = [core.ZERO, core.X, core.D, core.COIN, core.INHIBITOR, core.LEADER]


@st.composite
def states(draw, roles=ROLES):
    role = draw(st.sampled_from(roles))
    injunta = role == core.COIN and draw(st.booleans())
    return AgentState(
        role,
        draw(st.integers(0, GAMMA - 1)),
        injunta,
        PHI if injunta else draw(st.integers(0, PSI)),
        injunta or draw(st.booleans()),
        draw(st.booleans()),
        draw(st.integers(0, 2 * PHI + 3)),
        draw(st.integers(0, 2)),
        draw(st.integers(0, 2)),
        draw(st.booleans()),
    ).pack()


leaders = states([core.LEADER])
classes = st.integers(0, 4)

_LM_RANK = {core.A: 0, core.P: 1, core.W: 2}


def _check_monotone(before, after):
    if core.role(before) != core.role(after):
        return
    rl = core.role(before)
    if rl in (core.COIN, core.INHIBITOR, core.LEADER):
        assert core.level(after) >= core.level(before)
    if rl in (core.COIN, core.INHIBITOR):
        assert core.mode(after) >= core.mode(before)
    if rl == core.INHIBITOR:
        assert core.elev(after) >= core.elev(before)
    if rl == core.LEADER:
        assert _LM_RANK[core.leadermode(after)] >= _LM_RANK[core.leadermode(before)]
        assert core.cnt(after) <= core.cnt(before)


@given(states(), states())
def test_interact_monotone(r, i):
    r2, i2, _ = core.interact(r, i, CFG)
    _check_monotone(r, r2)
    _check_monotone(i, i2)


@given(states(), states())
def test_interact_pure(r, i):
    assert core.interact(r, i, CFG) == core.interact(r, i, CFG)


@given(states(), states())
def test_only_backup_touches_initiator(r, i):
    _, i2, _ = core.interact(r, i, CFG)
    if i2 != i:
        assert core.role(i) == core.LEADER or core.role(i) in (core.ZERO, core.X)
        if core.role(i) == core.LEADER:
            assert core.leadermode(i2) == core.W and core.is_alive(r)


@given(leaders, leaders)
def test_alive_pair_strictly_reduces(a, b):
    # two alive leaders meeting always leaves exactly one of them alive
    a = core.with_leadermode(a, a % 2 and core.A or core.P)
    b = core.with_leadermode(b, b % 2 and core.A or core.P)
    for use_cnt in (True, False):
        r, i = core.apply_backup(a, b, use_cnt)
        assert core.is_alive(r) + core.is_alive(i) == 1
    r, i, _ = core.interact(a, b, CFG)
    assert core.is_alive(r) + core.is_alive(i) == 1


@given(leaders, leaders)
def test_seniority_antisymmetric(a, b):
    assert core.seniority_compare(a, b, True) == -core.seniority_compare(b, a, True)


@given(states(), st.integers(0, 4))
def test_output_mapping(s, _):
    out_leader = core.role(s) == core.LEADER and core.leadermode(s) in (core.A, core.P)
    assert bool(core.is_alive(s)) == out_leader


# ------------------------------------------------------- stage reordering

STAGES = {
    "reset": lambda r, i, c: (core.apply_leader_reset(r, c), i),
    "flip": lambda r, i, c: (core.apply_leader_flip(r, i, c, PHI), i),
    "void": lambda r, i, c: (core.apply_void_epidemic(r, i, c), i),
    "advance": lambda r, i, c: (core.apply_drag_advance(r, i, PSI), i),
    "kill": lambda r, i, c: (core.apply_drag_kill(r, i), i),
    "backup": lambda r, i, c: core.apply_backup(r, i, True),
}
ORDER = list(STAGES)
NON_COMMUTING = {("reset", "advance"), ("flip", "kill"), ("void", "backup"),
                 ("reset", "backup"), ("flip", "backup")}
COMMUTING = [p for p in itertools.combinations(ORDER, 2) if p not in NON_COMMUTING]


def _run(names, r, i, c):
    for nm in names:
        r, i = STAGES[nm](r, i, c)
    return r, i


@settings(max_examples=300)
@given(leaders, states(), classes)
def test_commuting_stages_permute(r, i, c):
    for a, b in COMMUTING:
        assert _run([a, b], r, i, c) == _run([b, a], r, i, c), (a, b)


@settings(max_examples=300)
@given(leaders, states(), classes)
def test_full_pipeline_matches_documented_order(r, i, c):
    # interact must equal the documented stage order once the clock has run
    r_clock, cls = core.clock_update(r, core.phase(i), GAMMA)
    if core.role(i) in (core.ZERO, core.X):
        return
    got_r, got_i, got_c = core.interact(r, i, CFG)
    assert got_c == cls
    assert (got_r, got_i) == _run(ORDER, r_clock, i, cls)


def test_non_commuting_pairs_are_real():
    # each listed pair has a witness where the documented order matters
    w = {
        ("reset", "advance"): (core.PASS0,
                               AgentState(core.LEADER, flip=core.HEADS, leadermode=core.A),
                               AgentState(core.INHIBITOR, stop=True, high=True)),
        ("flip", "kill"): (core.EARLY,
                           AgentState(core.LEADER, cnt=5, leadermode=core.A),
                           AgentState(core.LEADER, level=1, leadermode=core.A)),
        ("void", "backup"): (core.LATE,
                             AgentState(core.LEADER, flip=core.TAILS, void=True, leadermode=core.A),
                             AgentState(core.LEADER, cnt=5, void=False, leadermode=core.A)),
    }
    for (a, b), (cls, r, i) in w.items():
        assert _run([a, b], r.pack(), i.pack(), cls) != _run([b, a], r.pack(), i.pack(), cls)


def test_void_then_backup_gives_w_over_p():
    r = AgentState(core.LEADER, flip=core.TAILS, void=True, leadermode=core.A).pack()
    i = AgentState(core.LEADER, void=False, leadermode=core.A, level=1).pack()
    out, _ = _run(ORDER, r, i, core.LATE)
    assert core.leadermode(out) == core.W


# ------------------------------------------------------ random streams

def _stream(n, pairs, cfg):
    pop = [AgentState(core.ZERO).pack()] * n
    for a, b in pairs:
        b = (a + 1 + b) % n
        before = pop[a]
        pop[a], pop[b], cls = core.interact(pop[a], pop[b], cfg)
        yield pop, a, before, cls


pair_lists = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 10)), min_size=50, max_size=800)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 12), pair_lists)
def test_alive_never_zero_on_streams(n, pairs):
    pairs = [(a % n, b % (n - 1)) for a, b in pairs]
    cfg = ProtocolParams(n, gamma=8, phi=1, psi=3, drag_final_epoch_only=False).to_array()
    seen = False
    for pop, *_ in _stream(n, pairs, cfg):
        alive = sum(core.is_alive(s) for s in pop)
        seen = seen or any(core.role(s) == core.LEADER for s in pop)
        if seen:
            assert alive >= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 12), pair_lists)
def test_flip_at_most_once_per_round(n, pairs):
    pairs = [(a % n, b % (n - 1)) for a, b in pairs]
    cfg = ProtocolParams(n, gamma=8, phi=1, psi=3).to_array()
    flips = {}
    for pop, a, before, cls in _stream(n, pairs, cfg):
        if core.role(pop[a]) != core.LEADER:
            continue
        if cls == core.PASS0:
            flips[a] = 0
        if core.role(before) == core.LEADER and core.flip(before) == core.NONE \
                and core.flip(pop[a]) != core.NONE:
            flips[a] = flips.get(a, 0) + 1
            assert flips[a] <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 12), pair_lists)
def test_monotone_on_streams(n, pairs):
    pairs = [(a % n, b % (n - 1)) for a, b in pairs]
    cfg = ProtocolParams(n, gamma=8, phi=1, psi=3).to_array()
    prev = [AgentState(core.ZERO).pack()] * n
    for pop, *_ in _stream(n, pairs, cfg):
        for x, y in zip(prev, pop):
            _check_monotone(x, y)
        prev = list(pop)


@given(st.lists(st.integers(0, 3), min_size=2, max_size=30))
def test_backup_only_terminates(choices):
    # any population of alive leaders collapses to one under repeated meetings
    pop = [AgentState(core.LEADER, cnt=c).pack() for c in choices]
    cfg = ProtocolParams(len(pop), backup_only=True).to_array()
    while True:
        alive = [k for k, s in enumerate(pop) if core.is_alive(s)]
        if len(alive) == 1:
            break
        a, b = alive[0], alive[1]
        pop[a], pop[b], _ = core.interact(pop[a], pop[b], cfg)
        assert sum(core.is_alive(s) for s in pop) == len(alive) - 1

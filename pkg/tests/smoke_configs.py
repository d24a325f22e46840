"""Small parameter sets that run every experiment in well under a second or two."""

SMALL = {
    "tw-edge": {"replicas": 200, "n_list": "20,40", "n": 40, "max_ks": 0.2},
    "kernel": {"pairs": 100},
    "two-bridge": {"trials": 2000},
    "jam-scaling": {"replicas": 100, "n": 60},
    "greedy": {"configs": 2000},
    "components": {"replicas": 100, "n": 40, "k": 4, "t": 0.25},
    "bridge-rep": {"replicas": 100, "n": 40, "k": 2, "t": 0.25},
    "modulus": {"replicas": 100, "n": 40, "steps": 8},
    "dyson-increment": {"replicas": 200, "n": 30},
    "melon-dyson": {"replicas": 200},
    "edge-tail": {"replicas": 200, "n": 30},
    "envelope": {"replicas": 100, "n": 30, "points": 9},
    "count-stats": {"replicas": 100, "n": 60},
    "point-locations": {"replicas": 100, "n": 60},
    "edge-spread": {"replicas": 10, "n": 40, "k": 4},
    "moment-bound": {"replicas": 100, "n": 60},
    "dominance": {"replicas": 500},
    "increment-tail": {"replicas": 200, "steps": 16},
}

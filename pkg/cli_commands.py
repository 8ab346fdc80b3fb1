suggested_commands = {
    'construct': 'build a canonical family member (H, U, V, HBAR, UBAR, USTAR, HSTAR, F, HP, GS, W, W1, W2, TENSOR)',
    'measure': 'measure disc2, dev2, cycle2, vdisc3 or the triad deviations of a graph file',
    'detect': 'search for an induced pattern or compute the dimension report of a graph file',
    'decompose': 'build a decomposition, classify its triads and report the error shape',
    'partition-stable': 'run a stable partitioner (goodsets1, goodstrong, equitable, removal, cleanup, symmetry)',
    'special-verify': 'check the special 3-graph axioms on a GS or HP instance',
    'witness': 'produce a split, pair split, intersection, hbar irregularity or mixed density witness',
    'suite': 'run the acceptance pipelines and print a pass/fail table',
}

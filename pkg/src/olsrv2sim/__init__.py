"""Discrete-time OLSRv2 simulator (RFC 7181 / RFC 6130 model).

Library layout:
    messages       HELLO/TC message union and constructors
    neighborhood   link set, 2-hop set, MPR validity and selection
    topology       advertised-router/topology sets and routing-set computation
    message_logs   processed/received duplicate suppression
    engine         one router's state machine (config, state, step functions)
    simnet         ground truth network, in-flight transmissions, global tick
    checkers       figure reproductions and route-optimality verdicts
    cli            olsrv2-sim command line front end
"""

__version__ = "0.1.0"

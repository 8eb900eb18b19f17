"""Built-in benchmark problems.

Forcing terms are stored already divided by ``t**beta``.
"""

from __future__ import annotations

BUILTIN = {
    "ex1": {
        "name": "ex1",
        "gamma": "1/2",
        "beta": "1/2",
        "H": "s^2",
        "g": "t^(3/2) - beta(1/2, 9/2)*t^(7/2)",
        "exact_y": "t^(3/2)",
        "description": "compact kernel s^2, exact solution t^(3/2)",
    },
    "ex2": {
        "name": "ex2",
        "gamma": "1/3",
        "beta": "2/3",
        "H": "sqrt(3)/(3*pi)",
        "g": "(1 - gamma(1/3)*gamma(55/12)/(pi*sqrt(3)*gamma(59/12)))*t^(13/4)",
        "exact_y": "t^(13/4)",
        "description": "Lighthill-type non-compact kernel, exact solution t^(13/4)",
    },
    "ex3": {
        "name": "ex3",
        "gamma": "1",
        "beta": "1",
        "H": "1/2",
        "g": "6/7*t^(5/2)",
        "exact_y": "t^(5/2)",
        "description": "heat-conduction type equation t y = 6/7 t^(7/2) + 1/2 int y, exact solution t^(5/2)",
    },
    "ex4": {
        "name": "ex4",
        "gamma": "1/2",
        "beta": "3/2",
        "H": "sqrt(2)/(2*pi)",
        "g": "(1 - gamma(19/5)/(sqrt(2*pi)*gamma(43/10)))*t^(9/5)",
        "exact_y": "t^(9/5)",
        "description": "non-compact kernel, exact solution t^(9/5)",
    },
    "ex5": {
        "name": "ex5",
        "gamma": "2/3",
        "beta": "1",
        "H": "s^(5/3)",
        "exact_y": "sqrt(t)*sin(t)",
        "manufacture": True,
        "description": "compact kernel s^(5/3), forcing manufactured from sqrt(t) sin(t)",
    },
}

# n-grids of the reference error tables
TABLE_GRIDS = {
    "ex2": (6, 8, 10, 12, 14, 16),
    "ex3": (4, 6, 8, 10, 12, 14),
    "ex4": (6, 8, 10, 12, 14, 16),
    "ex5": (6, 8, 10, 12, 14, 16),
}

REFERENCE_ERRORS = {
    "ex2": (5.17e-03, 9.61e-05, 5.37e-08, 3.61e-10, 9.79e-12, 5.28e-13),
    "ex3": (1.14e-03, 1.73e-04, 4.56e-05, 1.61e-05, 6.84e-06, 3.30e-06),
    "ex4": (2.34e-05, 3.08e-06, 6.55e-07, 1.86e-07, 6.40e-08, 2.54e-08),
    "ex5": (8.29e-04, 1.61e-05, 2.64e-06, 6.48e-08, 4.18e-09, 1.81e-09),
}

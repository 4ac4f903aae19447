"""Published dataset totals of the manually designed rules, for reports.

Values are (relocations, crane seconds) summed over the full datasets.
"""

PUBLISHED = {
    "caserta": {
        "TLP": (35982, 2430770),
        "RI": (29524, 2162170),
        "MM": (28996, 2173290),
        "PR3": (25859, 2064600),
        "PR4": (25787, 2063070),
        "PU1": (25049, 2034230),
        "PU2": (24962, 2031130),
    },
    "zhu": {
        "TLP": (551023, 41038200),
        "RI": (469502, 37508600),
        "MM": (473358, 38155300),
        "PR3": (436717, 37015300),
        "PR4": (435886, 36994500),
        "PU1": (423058, 36482700),
        "PU2": (422555, 36476100),
    },
}

"""Published reference values for the nominal parameter set.

These are the targets the comparison report measures against.  They are
reported values, not build targets: the toolkit always computes its own
quantities and emits (reference, computed, delta) triples.
"""

# Characteristic polynomial of the nominal plant, descending degree.
DENOMINATOR = (1.0, 50.0, 0.1375, 6.874)

# The companion realization used for synthesis normalizes the transfer
# function numerator to unity (the computed value is 0.99146).
NUMERATOR = (1.0,)

# Integral-action gain row for the nominal augmented weights.
LQI_GAIN = (0.2004, 9.8905, 1.0844, -0.7071)

# Reported bump-response peaks (meters) for a 0.1 m road bump.
PEAK_ROAD = 0.1
PEAK_LQG = 0.01
PEAK_LQI = 0.05

# Reported output-feedback compensator polynomial.  It is fourth order,
# which the order-preserving estimator/feedback construction cannot produce
# for a third-order plant, so it is carried for documentation only and no
# computation targets it.
LQG_COMPENSATOR_NUM = (0.5678, 2.8754, 1.4322, 2.0123)
LQG_COMPENSATOR_DEN = (1.0, 12.0, 35.0, 94.0, 112.0)

# Acceptance band for peak reproduction: within [0.2x, 5x] of the
# reference value (order-of-magnitude agreement).
PEAK_BAND_LOW = 0.2
PEAK_BAND_HIGH = 5.0


def comparison(reference: float, computed: float) -> dict:
    """A (reference, computed, delta) triple for the report."""
    return {
        "reference_value": float(reference),
        "computed_value": float(computed),
        "delta": float(computed - reference),
    }

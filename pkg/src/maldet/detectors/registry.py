"""Detector identifiers and score orientations.

Every detector declares whether a higher or a lower raw score indicates a
malicious sample; the evaluator never guesses.
"""

from ..errors import ConfigError

HIGHER_IS_MALICIOUS = "higher"
LOWER_IS_MALICIOUS = "lower"

ORIENTATIONS = {
    "mm1": HIGHER_IS_MALICIOUS,   # sensitive samples flip under light mutation
    "mm2": LOWER_IS_MALICIOUS,    # trigger samples survive heavy mutation
    "as": LOWER_IS_MALICIOUS,     # low switch-pattern likelihood
    "kd": LOWER_IS_MALICIOUS,     # low density near the predicted class
    "lid": HIGHER_IS_MALICIOUS,   # inflated local dimensionality
    "bu": LOWER_IS_MALICIOUS,     # trigger samples shrug off dropout
    "rb": LOWER_IS_MALICIOUS,     # fragile samples lose the region vote
    "fs": HIGHER_IS_MALICIOUS,    # probabilities move a lot under squeezing
}

FITTED_DETECTORS = ("mm", "as", "kd", "lid")
STATELESS_DETECTORS = ("bu", "rb", "fs")


def orientation(detector_id: str) -> str:
    try:
        return ORIENTATIONS[detector_id]
    except KeyError:
        raise ConfigError(f"unknown detector id {detector_id!r}; "
                          f"known: {sorted(ORIENTATIONS)}") from None

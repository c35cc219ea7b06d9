"""maldet: detecting adversarial and backdoor examples at inference time.

Subpackages: nn (network engine), data (datasets, triggers, poisoning),
attacks (FGSM, backdoor batches), detectors (mutation/SPRT, activation
space, kernel density, LID, auxiliaries), evaluation (ROC/AUC, timing,
reports), cli (batch frontend).
"""

__version__ = "0.1.0"

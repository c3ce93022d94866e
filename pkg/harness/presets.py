"""
Best configurations found by random search on the four polyphonic music
corpora, one column per regularized variant. The plain variant reuses the
norm-penalty column without its penalty.
"""
import math

from network.errors import ContractViolation
from network.initialization import InitSpec
from network.optim import OptimizerConfig

from .config import HyperConfig, variant_regularizers

COLUMNS = (
    "norm_penalty", "additive_step", "additive_sequence", "multiplicative_step",
    "multiplicative_sequence", "dropconnect_step", "dropconnect_sequence",
    "feedforward_noise",
)

BEST_CONFIGURATIONS = {
    "jsb_chorales": {
        "hidden_units": 200,
        "sigma_hh": [1e-4, 1e-3, 1e-3, 1e-4, 1e-4, 1e-3, 1e-3, 1e-3],
        "sigma_ih": [0.1, 0.1, 1e-3, 1e-2, 1e-3, 1e-2, 1e-3, 0.1],
        "sparsify_k": [15, 50, 50, 50, 25, 25, 50, 15],
        "rho_target": [1.1, 0.9, 1.0, 0.9, 0.9, 1.0, 1.0, 0.9],
        "norm": "L2",
        "log_lambda": -3.93,
        "drop_p": {"dropconnect_step": 0.92, "dropconnect_sequence": 0.56},
        "noise_sigma": {
            "additive_step": 0.01, "additive_sequence": 0.04,
            "multiplicative_step": 0.06, "multiplicative_sequence": 0.01,
            "feedforward_noise": 0.09,
        },
        "momentum": [0.9, 0.99, 0.9, 0.95, 0.9, 0.95, 0.95, 0.9],
        "step_rate": [1e-3, 1e-4, 1e-3, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4],
        "batch_size": [81, 27, 27, 81, 27, 81, 81, 81],
    },
    "nottingham": {
        "hidden_units": 200,
        "sigma_hh": [1e-4, 1e-4, 1e-3, 1e-4, 1e-4, 1e-3, 1e-3, 1e-4],
        "sigma_ih": [0.1, 0.1, 1e-2, 1e-3, 1e-3, 1e-2, 0.1, 1e-3],
        "sparsify_k": [15, 25, 25, 15, 25, 15, 25, 15],
        "rho_target": [0.9, 1.1, 1.0, 1.0, 1.0, 0.9, 1.1, 1.1],
        "norm": "L2",
        "log_lambda": -3.77,
        "drop_p": {"dropconnect_step": 0.36, "dropconnect_sequence": 0.78},
        "noise_sigma": {
            "additive_step": 0.01, "additive_sequence": 0.02,
            "multiplicative_step": 0.02, "multiplicative_sequence": 0.06,
            "feedforward_noise": 0.05,
        },
        "momentum": [0.95, 0.95, 0.95, 0.95, 0.95, 0.9, 0.9, 0.95],
        "step_rate": [1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-3, 1e-3, 1e-4],
        "batch_size": [81, 27, 27, 27, 27, 81, 81, 27],
    },
    "piano_midi": {
        "hidden_units": 100,
        "sigma_hh": [1e-4, 1e-3, 1e-3, 1e-4, 1e-4, 1e-3, 1e-4, 1e-4],
        "sigma_ih": [1e-3, 0.1, 1e-3, 1e-3, 0.1, 1e-3, 1e-2, 0.1],
        "sparsify_k": [15, 25, 15, 15, 15, 15, 25, 50],
        "rho_target": [0.9, 1.0, 1.0, 1.0, 0.9, 1.0, 0.9, 0.9],
        "norm": "L2",
        "log_lambda": -3.52,
        "drop_p": {"dropconnect_step": 0.69, "dropconnect_sequence": 0.51},
        "noise_sigma": {
            "additive_step": 0.05, "additive_sequence": 0.04,
            "multiplicative_step": 0.04, "multiplicative_sequence": 0.02,
            "feedforward_noise": 0.08,
        },
        "momentum": [0.95, 0.95, 0.99, 0.9, 0.95, 0.9, 0.95, 0.9],
        "step_rate": [1e-4, 1e-4, 1e-4, 1e-3, 1e-4, 1e-4, 1e-4, 1e-4],
        "batch_size": [27, 27, 81, 81, 81, 27, 81, 81],
    },
    "musedata": {
        "hidden_units": 600,
        "sigma_hh": [1e-3, 1e-4, 1e-4, 1e-3, 1e-3, 1e-4, 1e-4, 1e-4],
        "sigma_ih": [1e-2, 1e-2, 0.1, 0.1, 0.1, 1e-3, 0.1, 1e-3],
        "sparsify_k": [25, 50, 15, 50, 50, 50, 25, 15],
        "rho_target": [1.0, 0.9, 1.1, 1.0, 1.0, 1.1, 1.0, 0.9],
        "norm": "L1",
        "log_lambda": -3.80,
        "drop_p": {"dropconnect_step": 0.93, "dropconnect_sequence": 0.80},
        "noise_sigma": {
            "additive_step": 0.02, "additive_sequence": 0.02,
            "multiplicative_step": 0.04, "multiplicative_sequence": 0.09,
            "feedforward_noise": 0.01,
        },
        "momentum": [0.9, 0.99, 0.95, 0.95, 0.9, 0.9, 0.9, 0.95],
        "step_rate": [1e-4] * 8,
        "batch_size": [81, 27, 27, 81, 81, 27, 81, 81],
    },
}

# Published test cross-entropy per corpus and variant, for comparison in
# long reproduction runs.
REPORTED_TEST_CE = {
    "jsb_chorales": {
        "plain": 8.58, "norm_penalty": 8.83, "additive_step": 8.92,
        "additive_sequence": 8.96, "multiplicative_step": 8.64,
        "multiplicative_sequence": 8.64, "dropconnect_step": 8.48,
        "dropconnect_sequence": 8.55, "feedforward_noise": 8.67,
    },
    "nottingham": {
        "plain": 3.43, "norm_penalty": 3.70, "additive_step": 3.56,
        "additive_sequence": 3.58, "multiplicative_step": 3.51,
        "multiplicative_sequence": 3.50, "dropconnect_step": 3.49,
        "dropconnect_sequence": 3.57, "feedforward_noise": 3.54,
    },
    "piano_midi": {
        "plain": 7.58, "norm_penalty": 7.78, "additive_step": 7.66,
        "additive_sequence": 7.74, "multiplicative_step": 7.71,
        "multiplicative_sequence": 7.70, "dropconnect_step": 7.65,
        "dropconnect_sequence": 7.67, "feedforward_noise": 7.69,
    },
    "musedata": {
        "plain": 6.99, "norm_penalty": 8.62, "additive_step": 8.40,
        "additive_sequence": 8.40, "multiplicative_step": 8.13,
        "multiplicative_sequence": 8.12, "dropconnect_step": 7.98,
        "dropconnect_sequence": 8.00, "feedforward_noise": 8.10,
    },
}


def preset(corpus: str, variant: str, rho_target: float | None = None) -> HyperConfig:
    """
    Best published configuration of `variant` on `corpus`.
    Args:
        corpus (str): jsb_chorales, nottingham, piano_midi or musedata.
        variant (str): A model variant name.
        rho_target (float | None): Overrides the published spectral radius
            of the initial w_hh.
    Returns:
        HyperConfig: The configuration.
    Raises:
        ContractViolation: For an unknown corpus or variant.
    """
    if corpus not in BEST_CONFIGURATIONS:
        raise ContractViolation(
            f"Unknown corpus '{corpus}', expected one of "
            f"{sorted(BEST_CONFIGURATIONS)}"
        )
    table = BEST_CONFIGURATIONS[corpus]
    if variant != "plain" and variant not in COLUMNS:
        raise ContractViolation(f"Unknown variant '{variant}'")
    column = COLUMNS.index("norm_penalty" if variant == "plain" else variant)
    perturbation, penalty = variant_regularizers(
        variant,
        sigma=table["noise_sigma"].get(variant),
        drop_p=table["drop_p"].get(variant),
        norm=table["norm"],
        lam=math.pow(10.0, table["log_lambda"]),
    )
    return HyperConfig(
        init=InitSpec(
            sigma_hh=table["sigma_hh"][column],
            sigma_ih=table["sigma_ih"][column],
            sparsify_k=table["sparsify_k"][column],
            rho_target=table["rho_target"][column] if rho_target is None else rho_target,
        ),
        perturbation=perturbation,
        penalty=penalty,
        optimizer=OptimizerConfig(
            method="rmsprop",
            mu=table["momentum"][column],
            step_rate=table["step_rate"][column],
        ),
        batch_size=table["batch_size"][column],
        hidden_units=table["hidden_units"],
    )


def preset_names() -> list[str]:
    return [
        f"{corpus}/{variant}"
        for corpus in BEST_CONFIGURATIONS
        for variant in ("plain",) + COLUMNS
    ]


def preset_by_name(name: str) -> HyperConfig:
    """Look up a preset written as "corpus/variant"."""
    corpus, _, variant = name.partition("/")
    return preset(corpus, variant)

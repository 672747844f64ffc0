"""JSON Schemas for the documents emitted by the command line interface."""

import jsonschema

_num = {"type": ["number", "null"]}
_cnum = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"},
                                          "minItems": 2, "maxItems": 2}]}
_basis_map = lambda item: {  # noqa: E731
    "type": "object",
    "properties": {b: item for b in ("00", "01", "10", "11")},
    "required": ["00", "01", "10", "11"],
    "additionalProperties": False,
}
_triple = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}

CONFIG = {
    "type": "object",
    "properties": {
        "nu_mhz": {"type": "number"},
        "g0_mhz": _cnum, "g1_mhz": _cnum,
        "omega0_mhz": _cnum, "omega1_mhz": _cnum,
        "omega0p_mhz": _cnum, "omega1p_mhz": _cnum,
        "delta_cap0_mhz": {"type": "number"},
        "delta_cap1_mhz": {"type": "number"},
        "delta_small_mhz": {"type": "number"},
        "time_us": {"type": "number"},
        "t_max_us": {"type": "number"},
        "closure_tol": {"type": "number"},
        "entangle_tol": {"type": "number"},
        "fock_cutoff": {"type": "integer"},
        "integrator_accuracy": {"type": "number"},
        "output_path": {"type": ["string", "null"]},
        "output_format": {"enum": ["json", "csv"]},
    },
    "additionalProperties": False,
}
CONFIG["required"] = list(CONFIG["properties"])

GATE = {
    "type": "object",
    "required": ["t_us", "phases_rad", "phases_wrapped_rad", "entangling_measure_rad",
                 "entangling", "residual_amplitude", "fidelity_proxy"],
    "properties": {
        "t_us": {"type": "number"},
        "phases_rad": _basis_map({"type": "number"}),
        "phases_wrapped_rad": _basis_map({"type": "number", "minimum": -3.1415926535897936,
                                          "maximum": 3.1415926535897936}),
        "entangling_measure_rad": {"type": "number"},
        "entangling": {"type": "boolean"},
        "residual_amplitude": _basis_map(_triple),
        "fidelity_proxy": _basis_map({"type": "number", "minimum": 0, "maximum": 1}),
    },
}

OCCUPATION = {
    "type": "object",
    "required": ["t_span_us", "max", "mean", "cycle_mean", "overall_max", "published_max", "note"],
    "properties": {
        "max": _basis_map(_triple),
        "mean": _basis_map(_triple),
        "cycle_mean": _basis_map(_triple),
        "overall_max": {"type": "number"},
    },
}

COUPLINGS_DOC = {
    "type": "object",
    "required": ["command", "config", "lambda_mhz", "chi_mhz", "eta_mhz", "regime"],
    "properties": {
        "command": {"const": "couplings"},
        "config": CONFIG,
        "lambda_mhz": {"type": "object", "additionalProperties": _cnum},
        "chi_mhz": _basis_map({"type": "array", "items": _cnum, "minItems": 3, "maxItems": 3}),
        "eta_mhz": _triple,
        "regime": {"type": "object", "required": ["all_passed", "checks"]},
    },
}

GATE_DOC = {
    "type": "object",
    "required": ["command", "config", "gate", "phase_decomposition", "photon_occupation"],
    "properties": {
        "command": {"const": "gate"},
        "config": CONFIG,
        "gate": GATE,
        "photon_occupation": OCCUPATION,
    },
}

CLOSURE_DOC = {
    "type": "object",
    "required": ["command", "config", "closure", "eta_mhz"],
    "properties": {
        "command": {"const": "closure"},
        "config": CONFIG,
        "closure": {
            "type": "object",
            "required": ["T_us", "loops", "residual", "converged"],
            "properties": {"loops": {"type": "array", "items": {"type": "integer"}},
                           "residual": {"type": "number", "minimum": 0}},
        },
    },
}

VALIDATE_DOC = {
    "type": "object",
    "required": ["command", "config", "validation"],
    "properties": {
        "command": {"const": "validate"},
        "config": CONFIG,
        "validation": {"type": "object", "required": ["basis", "failed", "errors"]},
        "delta_scan": {"type": "array"},
    },
}

SWEEP_DOC = {
    "type": "object",
    "required": ["command", "config", "axes", "columns", "rows"],
    "properties": {
        "command": {"const": "sweep"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "object"}},
    },
}

REPRODUCE_DOC = {
    "type": "object",
    "required": ["command", "parameters", "time_us", "criteria", "passed", "gate", "photon_occupation"],
    "properties": {
        "command": {"const": "reproduce-paper"},
        "parameters": CONFIG,
        "time_us": {"type": "number"},
        "passed": {"type": "boolean"},
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "computed", "published", "tolerance", "passed"],
                "properties": {"passed": {"type": ["boolean", "null"]}},
            },
        },
        "gate": GATE,
        "photon_occupation": OCCUPATION,
    },
}

SCHEMAS = {
    "couplings": COUPLINGS_DOC,
    "gate": GATE_DOC,
    "closure": CLOSURE_DOC,
    "validate": VALIDATE_DOC,
    "sweep": SWEEP_DOC,
    "reproduce-paper": REPRODUCE_DOC,
}


def validate_document(doc):
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match its command's schema."""
    jsonschema.validate(doc, SCHEMAS[doc["command"]])

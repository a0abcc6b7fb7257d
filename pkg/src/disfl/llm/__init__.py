from .prompts import PromptTemplates, load_templates
from .session import (DUPLICATE, MISSING_POS, NO_DISFLUENCY, AllRoundsFailed, GenerationReport, GenSessionConfig, Rejection,
                      Transcript, clean_candidate, run_session, type_histogram,
                      validate_candidate)
from .transport import (FlakyTransport, HttpTransport, LlmTransport, MissingCredentials,
                        MockTransport, SamplingParams, TransportError, perturbing_responder)

__all__ = [
    "DUPLICATE", "MISSING_POS", "NO_DISFLUENCY",
    "PromptTemplates", "load_templates", "AllRoundsFailed", "GenerationReport",
    "GenSessionConfig", "Rejection", "Transcript", "clean_candidate", "run_session",
    "type_histogram", "validate_candidate", "FlakyTransport", "HttpTransport",
    "LlmTransport", "MissingCredentials", "MockTransport", "SamplingParams",
    "TransportError", "perturbing_responder",
]

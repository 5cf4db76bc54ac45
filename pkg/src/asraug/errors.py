"""Exception hierarchy.

Three branches map onto the CLI exit codes: ConfigError -> 1,
DataError -> 2, NumericError -> 3.
"""


class AsrAugError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AsrAugError):
    """Invalid configuration or usage (CLI exit code 1)."""


class DataError(AsrAugError):
    """Invalid or unusable input data (CLI exit code 2)."""


class NumericError(AsrAugError):
    """Numerical failure such as a non-finite loss (CLI exit code 3)."""


# --- audio / frontend ---

class UnsupportedFormat(DataError):
    """WAV input does not match the required encoding/rate/channel layout."""


class CorruptFile(DataError):
    """Container is structurally broken (truncated or malformed chunks)."""


class TooShort(DataError):
    """Clip shorter than a single analysis window."""


class DegenerateInput(DataError):
    """Input too small for the requested statistic (e.g. < 2 frames)."""


# --- model / training ---

class ConfigInvalid(ConfigError):
    """Model or training configuration violates its invariants."""


class ShapeMismatch(DataError):
    """Tensor shapes inconsistent with the model configuration."""


class TargetTooLong(DataError):
    """CTC target cannot be aligned within the available frames."""


class EmptyLogits(DataError):
    """Logits matrix has zero frames."""


class StaleCache(DataError):
    """Backward called with a cache not produced by a train-mode forward."""


class NonFiniteGradient(NumericError):
    """A gradient tensor contains NaN or infinity; the step was aborted."""


class NonFiniteLoss(NumericError):
    """Training loss became NaN or infinity."""


class EmptyManifest(DataError):
    """Manifest contains no utterances."""


class VocabMismatch(DataError):
    """Transcript contains a symbol outside the model charset."""


# --- metrics ---

class LengthMismatch(DataError):
    """Reference and hypothesis lists differ in length."""


class EmptyReferenceCorpus(DataError):
    """Reference corpus contains zero scoring tokens."""


# --- corpus / manifests ---

class ParseError(DataError):
    """Manifest line could not be parsed."""


class MissingField(DataError):
    """Manifest record lacks a required key."""


class InsufficientData(DataError):
    """Corpus cannot satisfy the requested sample size."""


class MissingGender(DataError):
    """Utterance lacks the gender tag required for balanced sampling."""


class TooSmall(DataError):
    """Corpus too small for the requested split."""


class DuplicatePath(DataError):
    """The same audio path occurs more than once."""


# --- synthesis ---

class UnmappableCharacter(DataError):
    """Grapheme not covered by the G2P rules."""


class PoolTooSmall(DataError):
    """Sentence pool too small for the requested corpus recipe."""


# --- language model ---

class EmptyCorpus(DataError):
    """No text left to train the language model on."""


# --- orchestration ---

class AudioUnreadable(DataError):
    """Too many utterances in a corpus could not be decoded."""

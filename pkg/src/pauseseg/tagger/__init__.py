from pauseseg.tagger.features import CharWindowTemplate, Vocabulary
from pauseseg.tagger.model import CrfModel, Gradient, ModelFormatError, nll_full, nll_partial
from pauseseg.tagger.scheme import (
    SchemeError, check_labels, labels_to_words, read_segmented, words_to_labels, write_segmented,
)
from pauseseg.tagger.train import (
    STRATEGIES, CompleteThenTrain, ConfigError, TrainConfig, complete, complete_then_train, tag,
    tag_corpus, train,
)

__all__ = [
    "CharWindowTemplate", "Vocabulary", "CrfModel", "Gradient", "ModelFormatError", "nll_full",
    "nll_partial", "SchemeError", "check_labels", "labels_to_words", "read_segmented",
    "words_to_labels", "write_segmented", "STRATEGIES", "CompleteThenTrain", "ConfigError",
    "TrainConfig", "complete", "complete_then_train", "tag", "tag_corpus", "train",
]

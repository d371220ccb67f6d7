"""Prompt-to-triple knowledge capture toolkit.

Builds zero-shot and few-shot extraction prompts over a fixed relation
vocabulary, parses completions into (subject, predicate, object) triples,
synthesizes the template/date-expansion/paraphrase training dataset, exports
fine-tuning data, and scores extraction runs with relation-based and
triple-based protocols.
"""

from .backend import (
    Completion,
    GenerationParams,
    HttpBackend,
    MockBackend,
    ReplayTape,
    complete_batch,
    mock_complete,
)
from .core import (
    NormalizedTerm,
    Relation,
    Triple,
    Vocabulary,
    inclusion_match,
    load_vocabulary,
    normalize_term,
)
from .datagen import (
    DatasetRecord,
    FinetuneManifest,
    PromptTemplate,
    SplitMode,
    SplitSpec,
    expand_templates,
    export_finetune,
    load_templates,
    paraphrase_records,
    split_records,
)
from .evaluation import (
    ConfusionCounts,
    EvalReport,
    EvalRun,
    F1Mode,
    Judgement,
    Protocol,
    Verdict,
    compute_metrics,
    evaluate_run,
    judge_relation,
    judge_triple,
)
from .parsing import (
    ExtractionOutcome,
    OutcomeKind,
    RawQuadruple,
    apply_relation_postprocess,
    extract_outcome,
    parse_response,
    serialize_triple,
)
from .prompting import (
    ChatMessage,
    FewShotExample,
    PromptBundle,
    PromptMode,
    build_few_shot,
    build_finetune_messages,
    build_finetuned,
    build_zero_shot,
    load_example_bank,
    vocabulary_fingerprint,
)

__version__ = "0.1.0"

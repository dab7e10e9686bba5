#pragma once

#include <stdexcept>
#include <string>

namespace ctxfuse {

enum class Err {
    // context model validation
    NotPositiveDefinite,
    AsymmetricSigma,
    BadDiagonal,
    NegativeFrequency,
    UnnormalizedMu,
    // corpus ingestion
    ParseError,
    UnknownSupercategory,
    EmptyCorpus,
    NoObjects,
    // generative model / latent state
    InvalidInput,
    InfeasibleEta,
    InvalidLatent,
    // diagnostics
    SeriesTooShort,
    WrongCount,
    // bayes net / hyperprior
    EvidenceUnseen,
    NoContexts,
    AllLikelihoodsZero,
    // misc
    DimensionMismatch,
    IoError,
};

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Err code() const noexcept { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ctxfuse

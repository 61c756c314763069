#ifndef XLINTEL_ERRORS_HPP_
#define XLINTEL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace xlintel {

// Base for every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define XLINTEL_DEFINE_ERROR(Name)              \
  class Name : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

XLINTEL_DEFINE_ERROR(IngestionError);
XLINTEL_DEFINE_ERROR(EmptyCorpusError);
XLINTEL_DEFINE_ERROR(ConfigError);
XLINTEL_DEFINE_ERROR(EmptyVocabularyError);
XLINTEL_DEFINE_ERROR(FormatError);
XLINTEL_DEFINE_ERROR(UnknownTokenError);
XLINTEL_DEFINE_ERROR(InputError);
XLINTEL_DEFINE_ERROR(ReferenceError);
XLINTEL_DEFINE_ERROR(NumericError);
XLINTEL_DEFINE_ERROR(EmptyTrainingSetError);
XLINTEL_DEFINE_ERROR(EmptyIntelError);
XLINTEL_DEFINE_ERROR(SerializationError);
XLINTEL_DEFINE_ERROR(UndefinedSimilarityError);

// cohens_kappa on labels where chance agreement is certain but observed
// agreement is not.
XLINTEL_DEFINE_ERROR(DegenerateLabelsError);

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

#undef XLINTEL_DEFINE_ERROR

}  // namespace xlintel

#endif  // XLINTEL_ERRORS_HPP_

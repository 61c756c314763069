#ifndef XLINTEL_TRANSLATOR_CHECKPOINT_HPP_
#define XLINTEL_TRANSLATOR_CHECKPOINT_HPP_

#include <string>

#include "xlintel/translator/seq2seq.hpp"

namespace xlintel {

// A checkpoint is a directory holding
//   manifest.json  format version, scalar type, d, h, vocab file names,
//                  tensors (name, shape, byte offset) and the train config
//   params.bin     little-endian row-major tensors in manifest order
//   src.vocab, tgt.vocab
// float models write 32-bit blobs, double models 64-bit.
template <typename Scalar>
void save_model(const Seq2SeqModel<Scalar>& model, const std::string& dir);

// Throws FormatError when the manifest, vocabularies and blob disagree.
// Loading a blob of the other precision converts it.
template <typename Scalar>
Seq2SeqModel<Scalar> load_model(const std::string& dir);

extern template void save_model<float>(const Seq2SeqModel<float>&, const std::string&);
extern template void save_model<double>(const Seq2SeqModel<double>&, const std::string&);
extern template Seq2SeqModel<float> load_model<float>(const std::string&);
extern template Seq2SeqModel<double> load_model<double>(const std::string&);

}  // namespace xlintel

#endif  // XLINTEL_TRANSLATOR_CHECKPOINT_HPP_

"""Generate a synthetic phishing corpus with planted trigger sentences.

Real email corpora only say *whether* an email is phishing, never *which
sentence* makes it so.  The synthetic generator plants exactly one
persuasion-trigger sentence per phishing email at a random position among
neutral filler sentences, and records the position in a sidecar file, so
localization can be scored exactly.
"""

from phishloc import SynthConfig, generate_corpus
from phishloc.metrics import default_lexicon, matched_principles
from phishloc.text import split_sentences

config = SynthConfig(n_emails=10, phishing_ratio=0.5, seed=42)
emails = generate_corpus(config)

print(f"{len(emails)} emails, {sum(e.label for e in emails)} phishing\n")

lexicon = default_lexicon()
for email in emails[:4]:
    kind = "PHISHING" if email.label == 1 else "benign"
    print(f"--- {email.id} [{kind}]")
    sentences = split_sentences(email.text)
    for i, sentence in enumerate(sentences):
        marker = "  <-- planted trigger" if i == email.trigger_index else ""
        print(f"  [{i}] {sentence}{marker}")
    if email.label == 1:
        print(f"  principle: {email.principle}, lexicon matches: "
              f"{matched_principles(sentences[email.trigger_index], lexicon)}")
    print()

# Same seed, same bytes: the corpus is fully reproducible.
again = generate_corpus(SynthConfig(n_emails=10, phishing_ratio=0.5, seed=42))
assert [e.text for e in again] == [e.text for e in emails]
print("regeneration with the same seed is byte-identical")

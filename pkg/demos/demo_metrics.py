"""Worked examples for every automatic metric in the suite."""

from commentart import metrics
from commentart.metrics import EntitySet, EntityWeights, RelevanceVector

print("== label metrics ==")
print("accuracy:", metrics.accuracy(["A", "B", "C"], ["A", "B", "D"]))
print("top-2:", metrics.top_k_accuracy([["B", "A"], ["C", "B"]], ["A", "A"], 2))
key = ["C", "A", "B", "E", "D"]
print("exact match:", metrics.exact_match_accuracy([key, key[::-1]], [key, key]))

print("\n== NDCG ==")
reference = ["C", "A", "B", "E", "D"]  # best first
rel = RelevanceVector.from_reference(reference)
print("reference order ->", metrics.ndcg(reference, rel))
print("reversed order  ->", round(metrics.ndcg(reference[::-1], rel), 4))

print("\n== n-gram metrics ==")
candidate = "the dog catches the frisbee at last"
reference_text = "the dog finally catches the frisbee"
print("BLEU-1:", round(metrics.bleu_n(candidate, [reference_text], 1), 4))
print("BLEU-2:", round(metrics.bleu_n(candidate, [reference_text], 2), 4))
print("ROUGE-L:", round(metrics.rouge_l(candidate, reference_text), 4))
print("DIST-1 over a set:", metrics.dist_1(["a b c", "a b d", "a e f"]))
print("Chinese tokenizes per character:", metrics.tokenize("狗狗终于接住了 frisbee"))

print("\n== weighted entity overlap ==")
corpus = [
    EntitySet.from_strings(["dog", "frisbee", "park"]),
    EntitySet.from_strings(["dog", "owner"]),
    EntitySet.from_strings(["dog", "medal"]),
]
weights = metrics.entity_weights(corpus)
print("w(dog)   =", round(weights.get("dog"), 4), "(frequent -> low weight)")
print("w(medal) =", round(weights.get("medal"), 4), "(rare -> high weight)")
generated = EntitySet.from_strings(["dog", "medal", "olympics"])
gold = EntitySet.from_strings(["dog", "medal"])
print("WEO(generated, gold) =", round(metrics.weo(generated, gold, weights), 4))
print("corpus WEO x100:", round(metrics.corpus_weo([(generated, gold)], weights), 2))

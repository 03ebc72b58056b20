# Prefix-interval ids for a class hierarchy, and subsumption by two shifts.
from rsreason.rdf_model import OWL_THING, RDFS_SUBCLASSOF, Iri, Triple
from rsreason.tbox import CONCEPT, bounds, classify, encode_hierarchy, extract_tbox, is_subsumed

SSN = "http://purl.oclc.org/NET/ssnx/ssn#"
term = lambda n: OWL_THING if n == "Thing" else Iri(SSN + n)  # noqa: E731

edges = [("Input", "Thing"), ("Output", "Thing"), ("Entity", "Thing"),
         ("Abstract", "Entity"), ("FeatureOfInterest", "Entity"), ("InformationEntity", "Entity"),
         ("Object", "Entity"), ("Quality", "Entity"), ("Event", "Entity"),
         ("Process", "Event"), ("Action", "Event")] + [(f"Event{i}", "Event") for i in range(3, 9)]

d = encode_hierarchy(classify(extract_tbox([Triple(term(a), RDFS_SUBCLASSOF, term(b)) for a, b in edges]), CONCEPT))
print(f"total bits T = {d.total_bits}")

# raw code, then the id left-aligned to T bits
for name in ["Thing", "Input", "Entity", "Event", "Action"]:
    e = d.entry(term(name))
    print(f"{name:18s} raw={format(e.raw_id, 'b'):12s} id={e.normalized_id:0{d.total_bits}b}  [{e.lower_bound}, {e.upper_bound})")

# every sub-element of Event lives inside Event's interval
lb, ub, _ = bounds(d, term("Event"))
print("Action in Event:", lb <= d.id_of(term("Action")) < ub, is_subsumed(d, term("Action"), term("Event")))
print("Input in Entity:", is_subsumed(d, term("Input"), term("Entity")))

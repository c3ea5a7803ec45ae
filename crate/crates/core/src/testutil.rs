use crate::model::{Schema, Sequence, TypePattern};

pub const MEDICAL: &str = "\
# antibiotic treatment schema
taxonomy NewT (Any(Bacteria(Gammaproteobacteria(Ecoli,Klebsiella),Firmicutes(Staph))))
taxonomy ATC (ATC(J01(J01C(J01CA,J01CR),J01D(J01DD))))
taxonomy SIR (Any(Tested(Sensitive,Resistant,Intermediate),Not-tested))
taxonomy ID (Any(=,≠))
eventtype T ATC
eventtype B NewT
reltype B T SIR
reltype B B ID
reltype T T ID
";

pub fn medical_schema() -> Schema {
    Schema::parse(MEDICAL, |p| Err(format!("no file {p}"))).unwrap()
}

/// Types `a`, `b`, ... with empty schemas.
pub fn letters_schema(n: usize) -> Schema {
    let text: String = (0..n)
        .map(|i| format!("eventtype {}\n", (b'a' + i as u8) as char))
        .collect();
    Schema::parse(&text, |p| Err(format!("no file {p}"))).unwrap()
}

pub fn tp(schema: &Schema, text: &str) -> TypePattern {
    TypePattern::parse(text, schema).unwrap()
}

pub fn types_of(schema: &Schema, seq: &Sequence) -> String {
    seq.events()
        .iter()
        .map(|e| schema.type_name(e.etype))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Types `a`, `b`, ... each described by one value taxonomy `V` with twelve
/// leaves `v1..v12`, so repeated types can share a transaction.
pub fn valued_schema(n: usize) -> Schema {
    let mut text = String::from("taxonomy V (Any(v1,v2,v3,v4,v5,v6,v7,v8,v9,v10,v11,v12))\n");
    for i in 0..n {
        text.push_str(&format!("eventtype {} V\n", (b'a' + i as u8) as char));
    }
    Schema::parse(&text, |p| Err(format!("no file {p}"))).unwrap()
}

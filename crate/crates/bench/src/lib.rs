//! Fixtures shared by the benchmarks.

use snippet_forge_core::llm::{MockBackend, PromptKind, TranscriptRecord};
use snippet_forge_core::snippet::{parse_import_statement, CodeSnippet, ImportSet, Language};

/// Java import set of `n` classes spread over a few packages.
pub fn import_set(n: usize, seed: usize) -> ImportSet {
    (0..n)
        .map(|i| {
            let line = format!("import org.lib{}.pkg{}.Type{};", (i + seed) % 4, i % 3, i + seed);
            parse_import_statement(&line, Language::Java).expect("well-formed import")
        })
        .collect()
}

/// A Java snippet that uses `n` unqualified types.
pub fn snippet(n: usize) -> CodeSnippet {
    let mut body = String::from("public class Demo {\n    void run() {\n");
    for i in 0..n {
        body.push_str(&format!("        Type{i} v{i} = new Type{i}();\n"));
    }
    body.push_str("    }\n}\n");
    CodeSnippet::new("bench", Language::Java, "lib", &body, None)
}

/// Scripted answers for `k` samples where three candidate sets compete.
pub fn voting_backend(k: u32) -> MockBackend {
    let answers = [import_set(6, 0), import_set(6, 1), import_set(5, 0)];
    let records = (0..k)
        .map(|i| {
            let text = answers[(i as usize * 7) % 3].serialize();
            TranscriptRecord::new(PromptKind::Infer, "bench", Some(i + 1), text)
        })
        .collect();
    MockBackend::new(records)
}

fn utf8(pool: &mut Vec<u8>, s: &str) {
    pool.push(1);
    pool.extend_from_slice(&(s.len() as u16).to_be_bytes());
    pool.extend_from_slice(s.as_bytes());
}

/// A class file for `demo.Widget` with `fields` fields and `methods` methods
/// and no attributes.
pub fn class_file(fields: u16, methods: u16) -> Vec<u8> {
    let mut pool = Vec::new();
    let mut count: u16 = 1;
    let mut next = |pool: &mut Vec<u8>, f: &dyn Fn(&mut Vec<u8>)| {
        f(pool);
        count += 1;
        count - 1
    };
    let this_name = next(&mut pool, &|p| utf8(p, "demo/Widget"));
    let this = next(&mut pool, &|p| {
        p.push(7);
        p.extend_from_slice(&this_name.to_be_bytes());
    });
    let super_name = next(&mut pool, &|p| utf8(p, "java/lang/Object"));
    let sup = next(&mut pool, &|p| {
        p.push(7);
        p.extend_from_slice(&super_name.to_be_bytes());
    });
    let desc = next(&mut pool, &|p| utf8(p, "()V"));
    let member_names: Vec<u16> = (0..fields.max(methods))
        .map(|i| next(&mut pool, &|p| utf8(p, &format!("member{i}"))))
        .collect();

    let mut out = Vec::new();
    out.extend_from_slice(&0xCAFE_BABEu32.to_be_bytes());
    out.extend_from_slice(&[0, 0, 0, 52]);
    out.extend_from_slice(&count.to_be_bytes());
    out.extend_from_slice(&pool);
    out.extend_from_slice(&0x0021u16.to_be_bytes());
    out.extend_from_slice(&this.to_be_bytes());
    out.extend_from_slice(&sup.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    for n in [fields, methods] {
        out.extend_from_slice(&n.to_be_bytes());
        for name in &member_names[..n as usize] {
            out.extend_from_slice(&0x0001u16.to_be_bytes());
            out.extend_from_slice(&name.to_be_bytes());
            out.extend_from_slice(&desc.to_be_bytes());
            out.extend_from_slice(&0u16.to_be_bytes());
        }
    }
    out.extend_from_slice(&0u16.to_be_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use snippet_forge_core::kb::parse_class;

    #[test]
    fn class_file_parses() {
        let c = parse_class(&class_file(3, 5)).unwrap();
        assert_eq!(c.name, "demo.Widget");
        assert_eq!(c.super_name.as_deref(), Some("java.lang.Object"));
        assert_eq!((c.fields.len(), c.methods.len()), (3, 5));
    }

    #[test]
    fn fixtures() {
        assert_eq!(import_set(10, 0).len(), 10);
        assert!(snippet(4).body.contains("Type3 v3"));
    }
}

use proptest::prelude::*;
use std::collections::BTreeMap;
use std::path::PathBuf;
use texlate::generator::reassemble;
use texlate::parser::{count_tokens, parse_project, PlaceholderKind, ProjectSource, ANY_TOKEN};

fn block() -> impl Strategy<Value = String> {
    let word = "[a-z]{1,8}";
    prop_oneof![
        prop::collection::vec(word, 1..6).prop_map(|w| format!("{}.\n", w.join(" "))),
        word.prop_map(|w| format!("\\section{{{w}}}\n")),
        word.prop_map(|w| format!("\\subsection*{{{w}}}\n")),
        word.prop_map(|w| format!("Inline ${w}^2$ math.\n")),
        word.prop_map(|w| format!("\\begin{{equation}}\n{w} = 1\n\\end{{equation}}\n")),
        (word, word).prop_map(|(a, b)| format!(
            "\\begin{{itemize}}\n\\item {a}\n\\begin{{enumerate}}\\item {b}\\end{{enumerate}}\n\\end{{itemize}}\n"
        )),
        (word, word).prop_map(|(a, b)| format!(
            "\\begin{{figure}}\n\\centering\n\\caption{{{a} {{\\em {b}}} text}}\n\\end{{figure}}\n"
        )),
        word.prop_map(|w| format!("\\begin{{table*}}\\caption[s]{{{w}}}\\end{{table*}}\n")),
        word.prop_map(|w| format!("% comment \\section{{{w}}} \\begin{{x}}\n")),
        word.prop_map(|w| format!("\\begin{{verbatim}}\n\\end{{itemize}} {w} {{\n\\end{{verbatim}}\n")),
        word.prop_map(|w| format!("\\[ {w} \\]\n$$ {w} $$\n")),
        Just("50\\% and \\{braces\\} \\\\\n".to_string()),
        Just("\n\n".to_string()),
    ]
}

fn document() -> impl Strategy<Value = String> {
    (prop::collection::vec(block(), 0..12), any::<bool>()).prop_map(|(blocks, framed)| {
        let body = blocks.concat();
        if framed {
            format!("\\documentclass{{article}}\n\\begin{{document}}\n{body}\\end{{document}}\n")
        } else {
            body
        }
    })
}

fn project(files: Vec<(String, String)>) -> ProjectSource {
    ProjectSource {
        root_dir: PathBuf::from("."),
        main_file: files[0].0.clone(),
        files: files.into_iter().collect::<BTreeMap<_, _>>(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_restore_is_lossless(text in document()) {
        let doc = parse_project(&project(vec![("main.tex".into(), text.clone())])).unwrap();
        prop_assert_eq!(doc.restore(), text.clone());
        let joined: String = doc.units.iter()
            .filter(|u| u.granularity == texlate::parser::Granularity::SectionContext)
            .map(|u| u.source_text.as_str())
            .collect();
        prop_assert_eq!(joined, doc.substituted_text.clone());
        let out = reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap();
        prop_assert_eq!(&out, &text);
        prop_assert!(!ANY_TOKEN.is_match(&out));
    }

    #[test]
    fn token_counts_equal_map_sizes(text in document()) {
        let doc = parse_project(&project(vec![("main.tex".into(), text)])).unwrap();
        let counts = count_tokens(&doc.substituted_text);
        prop_assert_eq!(counts.get(&PlaceholderKind::Env).copied().unwrap_or(0), doc.env_map.len());
        let with_envs = doc.env_map.restore(&doc.substituted_text);
        prop_assert_eq!(count_tokens(&with_envs).get(&PlaceholderKind::Cap).copied().unwrap_or(0), doc.cap_map.len());
    }

    #[test]
    fn multi_file_split_is_lossless(parts in prop::collection::vec(document(), 1..4)) {
        let mut main = String::from("\\documentclass{article}\n\\begin{document}\n");
        let mut files = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            main.push_str(&format!("\\input{{part{i}}}\n"));
            files.push((format!("part{i}.tex"), part.replace("\\documentclass{article}\n\\begin{document}\n", "").replace("\\end{document}\n", "")));
        }
        main.push_str("\\end{document}\n");
        let mut all = vec![("main.tex".to_string(), main)];
        all.extend(files);
        let doc = parse_project(&project(all.clone())).unwrap();
        let text = reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap();
        let split = doc.merged.split_files(&text).unwrap();
        let expected: BTreeMap<String, String> = all.into_iter().collect();
        let got: BTreeMap<String, String> = split.into_iter().collect();
        prop_assert_eq!(got, expected);
    }
}

//! Reads a graph from an edge list and a node table, then writes it back.
//! Without arguments a small dataset is written to a temporary directory
//! first.
//!
//!     cargo run --example ingest_dataset -- [edges.txt nodes.csv]
//!
//! edges.txt holds one whitespace-separated pair of node ids per line.
//! nodes.csv has a header and the columns `node_id,label,sensitive,f0,f1,...`;
//! an empty label or sensitive field marks it unknown.

use std::path::PathBuf;

use fair_unlearn::graph::io::{ingest_dataset, write_dataset, IngestSummary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::env::temp_dir().join("fair-unlearn-ingest");
    std::fs::create_dir_all(&dir)?;
    let (edges, nodes) = match args.as_slice() {
        [e, n] => (PathBuf::from(e), PathBuf::from(n)),
        _ => {
            let e = dir.join("edges.txt");
            let n = dir.join("nodes.csv");
            std::fs::write(&e, "alice bob\nbob carol\ncarol alice\ncarol dave\ndave erin\nbob alice\n")?;
            std::fs::write(
                &n,
                "node_id,label,sensitive,age,income\n\
                 alice,1,0,0.3,1.2\n\
                 bob,0,1,0.5,0.4\n\
                 carol,,1,0.9,0.8\n\
                 dave,1,,0.1,0.2\n\
                 erin,0,0,0.7,0.6\n",
            )?;
            (e, n)
        }
    };

    let graph = ingest_dataset(&edges, &nodes)?;
    println!("{}", IngestSummary::of(&graph));
    for v in 0..graph.num_nodes().min(5) {
        let neighbors: Vec<&str> = graph.neighbors(v).iter().map(|&u| graph.node_id(u)).collect();
        println!(
            "  {:<6} label {:?} sensitive {:?} neighbors {neighbors:?}",
            graph.node_id(v),
            graph.label(v),
            graph.sensitive()[v]
        );
    }

    let out_edges = dir.join("roundtrip-edges.txt");
    let out_nodes = dir.join("roundtrip-nodes.csv");
    write_dataset(&graph, &out_edges, &out_nodes)?;
    let again = ingest_dataset(&out_edges, &out_nodes)?;
    println!("written to {} and read back: {}", dir.display(), IngestSummary::of(&again));
    Ok(())
}

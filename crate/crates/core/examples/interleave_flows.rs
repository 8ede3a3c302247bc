//! Validate a flow, interleave two instances of it, and count the paths.

use std::sync::Arc;

use flowtrace::flow::{index_flow, interleave, validate_flow, FlowSpec, MessageDef, DEFAULT_STATE_CAP};

fn main() {
    let spec = FlowSpec::new("cache")
        .states(["Init", "Wait", "GntW", "Done"])
        .initial("Init")
        .stop("Done")
        .atomic("GntW")
        .message(MessageDef::new("ReqE", 1))
        .message(MessageDef::new("GntE", 1))
        .message(MessageDef::new("Ack", 1))
        .edge("Init", "ReqE", "Wait")
        .edge("Wait", "GntE", "GntW")
        .edge("GntW", "Ack", "Done");
    let flow = Arc::new(validate_flow(spec).expect("valid flow"));

    let instances = vec![index_flow(flow.clone(), 1).unwrap(), index_flow(flow, 2).unwrap()];
    let ifl = interleave(instances, DEFAULT_STATE_CAP).unwrap();
    println!("{} product states, {} edges", ifl.state_count(), ifl.edges().len());

    // While one instance holds GntW the other may not move, so (GntW, GntW)
    // is unreachable.
    assert_eq!(ifl.state_count(), 15);
    assert_eq!(ifl.count_paths().unwrap(), 6);

    for trace in ifl.enumerate_traces(10).unwrap().0 {
        let labels: Vec<String> = trace.iter().map(ToString::to_string).collect();
        println!("  {}", labels.join(" "));
    }
}

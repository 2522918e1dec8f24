from .ap import APService, ap_service_loop
from .credentials import Credentials, provision_credentials
from .frames import Frame, FrameBuffer, FrameKind, decode_frame, encode_frame, read_frame
from .ue import UEOutcome, ue_client_loop
from .loopback import ManualClock, run_loopback

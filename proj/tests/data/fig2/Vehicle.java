package garage;

public interface Vehicle {
    void drive(int distance);
}
